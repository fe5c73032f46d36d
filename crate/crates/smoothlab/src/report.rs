//! Report writers. CSV is the primary machine-readable format (stable
//! column order); JSON mirrors it. All float formatting uses the shortest
//! round-trip representation, so identical runs produce identical bytes.

use std::fmt::Write as FmtWrite;

use crate::primes::MertensRecord;
use crate::scan::{ScanRecord, VerifyReport};

/// Columns: n,m,z,upsilon,exact,approx,abs_err,scaled_err,method,mc_ci,variant
pub fn scan_records_csv(records: &[ScanRecord]) -> String {
    let mut out = String::new();
    out.push_str("n,m,z,upsilon,exact,approx,abs_err,scaled_err,method,mc_ci,variant\n");
    for r in records {
        let z = r.z.map(|z| z.to_string()).unwrap_or_default();
        let variant = r.variant.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.m,
            z,
            r.upsilon,
            r.exact,
            r.approx,
            r.abs_err,
            r.scaled_err,
            r.method,
            r.mc_ci,
            variant
        )
        .unwrap();
    }
    out
}

pub fn scan_records_json(records: &[ScanRecord]) -> String {
    let mut s = serde_json::to_string_pretty(records).expect("records serialize");
    s.push('\n');
    s
}

/// Columns as named in the CLI contract for `smoothlab mertens`.
pub fn mertens_csv(records: &[MertensRecord]) -> String {
    let mut out = String::new();
    out.push_str(
        "n,lambda,log_n,first_resid,first_bound,second_resid,second_bound,\
         third_scaled_resid,pi_n,trudgian_resid,trudgian_bound,pass\n",
    );
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.lambda,
            r.log_n,
            r.first_resid,
            r.first_bound,
            r.second_resid,
            r.second_bound,
            r.third_scaled_resid,
            r.pi_n,
            r.trudgian_resid,
            r.trudgian_bound,
            r.pass
        )
        .unwrap();
    }
    out
}

pub fn mertens_json(records: &[MertensRecord]) -> String {
    let mut s = serde_json::to_string_pretty(records).expect("records serialize");
    s.push('\n');
    s
}

pub fn verify_report_json(report: &VerifyReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan::{GammaVariant, Method, ScanRecord};

    #[test]
    fn csv_has_stable_columns_and_empty_optionals() {
        let rec = ScanRecord {
            n: 100,
            m: 10,
            z: None,
            upsilon: 2.0,
            exact: 0.5,
            approx: 0.25,
            abs_err: 0.25,
            scaled_err: 1.0,
            method: Method::Exact,
            mc_ci: 0.0,
            variant: Some(GammaVariant::GammaOff),
        };
        let csv = scan_records_csv(&[rec]);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,m,z,upsilon,exact,approx,abs_err,scaled_err,method,mc_ci,variant"
        );
        assert_eq!(lines.next().unwrap(), "100,10,,2,0.5,0.25,0.25,1,exact,0,gamma-off");
    }
}
