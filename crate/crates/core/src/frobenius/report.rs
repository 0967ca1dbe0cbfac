use std::fmt;

use crate::matrix::HermitianMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    Frobenius,
    Nuclear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Rss,
    UStat,
    ReAvg,
    PairedRss,
    NuclearS1,
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::Frobenius => "Frobenius",
            NormKind::Nuclear => "Nuclear",
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rss => "RSS",
            Method::UStat => "UStat",
            Method::ReAvg => "ReAvg",
            Method::PairedRss => "PairedRSS",
            Method::NuclearS1 => "NuclearS1",
        })
    }
}

pub const REPORT_CSV_HEADER: &str = "method,norm_kind,alpha,n,d,statistic_value,radius_sq,covered,k_hat";

/// A ball `{v : |v - center|^2 <= radius_sq}` in the stated norm.
#[derive(Clone, Debug)]
pub struct ConfidenceReport {
    pub center: HermitianMatrix,
    pub radius_sq: f64,
    pub norm_kind: NormKind,
    pub level_alpha: f64,
    pub method: Method,
    /// Raw statistic; may be negative.
    pub statistic_value: f64,
    pub n: usize,
    pub d: usize,
    pub k_hat: Option<usize>,
}

impl ConfidenceReport {
    pub fn radius(&self) -> f64 {
        self.radius_sq.sqrt()
    }

    pub fn distance(&self, v: &HermitianMatrix) -> f64 {
        match self.norm_kind {
            NormKind::Frobenius => self.center.dist_frobenius(v),
            NormKind::Nuclear => self.center.dist_nuclear(v),
        }
    }

    pub fn contains(&self, v: &HermitianMatrix) -> bool {
        self.distance(v).powi(2) <= self.radius_sq
    }

    pub fn csv_row(&self, truth: Option<&HermitianMatrix>) -> String {
        let covered = truth.map_or(String::new(), |t| u8::from(self.contains(t)).to_string());
        let k_hat = self.k_hat.map_or(String::new(), |k| k.to_string());
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.method, self.norm_kind, self.level_alpha, self.n, self.d, self.statistic_value, self.radius_sq, covered, k_hat
        )
    }
}
