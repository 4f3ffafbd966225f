//! Closed-form butterfly/multiplier/adder counts for the reused-butterfly
//! design against a fully unrolled one.

use std::fmt::Write as _;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{check_pow2, Error, Result};

const UNIT: &str = "resource_model";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Design {
    /// `n/2` butterflies per 1D block, reused on every stage.
    Proposed,
    /// One butterfly per (pair, stage): `(n/2) log2 n` per 1D block.
    Traditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Fft1d,
    Fft2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResourceReport {
    pub n: u64,
    pub design: Design,
    pub scope: Scope,
    pub butterfly_units: u64,
    pub multipliers: u64,
    pub adders: u64,
}

pub fn resources(n: u64, design: Design, scope: Scope) -> Result<ResourceReport> {
    let log = u64::from(check_pow2(UNIT, n as usize, 2)?);
    let per_block = match design {
        Design::Proposed => n / 2,
        Design::Traditional => n / 2 * log,
    };
    let blocks = match scope {
        Scope::Fft1d => 1,
        Scope::Fft2d => 2,
    };
    let bu = per_block * blocks;
    // Each butterfly holds one complex multiplier and one adder/subtractor pair.
    Ok(ResourceReport {
        n,
        design,
        scope,
        butterfly_units: bu,
        multipliers: bu,
        adders: 2 * bu,
    })
}

/// Proposed over traditional butterfly count for the 2D processor,
/// `1 / log2 n`.
pub fn reduction_factor(n: u64) -> Result<Ratio<u64>> {
    if n < 4 {
        return Err(Error::config(
            UNIT,
            format!("reduction factor needs n >= 4, got {n}"),
        ));
    }
    let log = u64::from(check_pow2(UNIT, n as usize, 4)?);
    Ok(Ratio::new(1, log))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub n: u64,
    pub proposed: ResourceReport,
    pub traditional: ResourceReport,
    /// Proposed / traditional butterfly units (equal for every resource kind).
    #[serde(serialize_with = "ratio_string")]
    pub ratio: Ratio<u64>,
}

fn ratio_string<S: serde::Serializer>(
    r: &Ratio<u64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// 2D comparison table over `n_values`, sorted by `n` with duplicates
/// dropped.
pub fn sweep_report(n_values: &[u64]) -> Result<Vec<SweepRow>> {
    let mut ns = n_values.to_vec();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let proposed = resources(n, Design::Proposed, Scope::Fft2d)?;
            let traditional = resources(n, Design::Traditional, Scope::Fft2d)?;
            Ok(SweepRow {
                n,
                proposed,
                traditional,
                ratio: Ratio::new(proposed.butterfly_units, traditional.butterfly_units),
            })
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: &str = "n,proposed_bu,traditional_bu,proposed_mul,traditional_mul,proposed_add,traditional_add,alpha,alpha_decimal";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{SWEEP_CSV_HEADER}");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            r.proposed.butterfly_units,
            r.traditional.butterfly_units,
            r.proposed.multipliers,
            r.traditional.multipliers,
            r.proposed.adders,
            r.traditional.adders,
            r.ratio,
            *r.ratio.numer() as f64 / *r.ratio.denom() as f64,
        );
    }
    s
}

/// All four reports for one `n`, as a JSON document.
pub fn report_json(n: u64) -> Result<serde_json::Value> {
    let mut reports = Vec::new();
    for scope in [Scope::Fft1d, Scope::Fft2d] {
        for design in [Design::Proposed, Design::Traditional] {
            reports.push(resources(n, design, scope)?);
        }
    }
    let alpha = if n >= 4 {
        serde_json::Value::String(reduction_factor(n)?.to_string())
    } else {
        serde_json::Value::Null
    };
    Ok(serde_json::json!({ "n": n, "reports": reports, "alpha": alpha }))
}
