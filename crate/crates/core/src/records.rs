//! Serializable views of the reports. Exact rationals travel as `"p/q"`
//! strings next to their decimal values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraElement, ApproxElement, SimplexPoint};
use crate::group::{ElementSet, FiniteGroup};
use crate::modm::{ModMReport, ResidueCycle};
use crate::predictor::LimitReport;
use crate::profile::{AccumulationSet, DynamicsProfile, LimitPoint};
use crate::rational;
use crate::series::{CoeffState, Extinction, ProbPoly, Scalar};

fn exact_strings(x: &AlgebraElement) -> Vec<String> {
    x.coeffs().iter().map(rational::format).collect()
}

fn labels(set: &ElementSet) -> Vec<String> {
    set.labels()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub order: usize,
    pub identity: String,
    pub labels: Vec<String>,
}

impl From<&FiniteGroup> for GroupRecord {
    fn from(g: &FiniteGroup) -> Self {
        GroupRecord {
            order: g.order(),
            identity: g.label(g.identity()).to_owned(),
            labels: g.labels().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    /// Exact coefficients, when the point is exact.
    pub exact: Option<Vec<String>>,
    pub decimal: Vec<f64>,
}

impl From<&SimplexPoint> for PointRecord {
    fn from(x: &SimplexPoint) -> Self {
        PointRecord {
            exact: Some(exact_strings(x.as_element())),
            decimal: x.to_approx().coeffs().to_vec(),
        }
    }
}

impl From<&ApproxElement> for PointRecord {
    fn from(x: &ApproxElement) -> Self {
        PointRecord {
            exact: None,
            decimal: x.coeffs().to_vec(),
        }
    }
}

/// `base + scalar * slope` with exact parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitPointRecord {
    pub base: Vec<String>,
    pub slope: Vec<String>,
    pub scalar: f64,
    pub scalar_exact: Option<String>,
    pub point: PointRecord,
}

impl From<&LimitPoint> for LimitPointRecord {
    fn from(p: &LimitPoint) -> Self {
        let point = match p.to_exact() {
            Some(x) => PointRecord::from(&x),
            None => PointRecord::from(&p.to_approx()),
        };
        LimitPointRecord {
            base: exact_strings(&p.base),
            slope: exact_strings(&p.slope),
            scalar: p.scalar,
            scalar_exact: p.scalar_exact.as_ref().map(rational::format),
            point,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub return_time: usize,
    pub period: usize,
    pub subgroup: Vec<String>,
    pub idempotent: PointRecord,
}

impl From<&DynamicsProfile> for ProfileRecord {
    fn from(p: &DynamicsProfile) -> Self {
        ProfileRecord {
            return_time: p.return_time,
            period: p.period,
            subgroup: labels(&p.subgroup),
            idempotent: PointRecord::from(&p.idempotent),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccumulationRecord {
    pub source: String,
    pub points: Vec<PointRecord>,
    /// Cluster sizes, for empirical sets.
    pub sizes: Option<Vec<usize>>,
}

impl From<&AccumulationSet> for AccumulationRecord {
    fn from(set: &AccumulationSet) -> Self {
        match set {
            AccumulationSet::ClosedForm(points) => AccumulationRecord {
                source: set.source().into(),
                points: points.iter().map(|p| LimitPointRecord::from(p).point).collect(),
                sizes: None,
            },
            AccumulationSet::Empirical(c) => AccumulationRecord {
                source: set.source().into(),
                points: c.representatives.iter().map(PointRecord::from).collect(),
                sizes: Some(c.sizes.clone()),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub modulus: usize,
    pub base: usize,
    pub preperiod: usize,
    pub period: usize,
    pub residues: Vec<usize>,
}

impl From<&ResidueCycle> for CycleRecord {
    fn from(c: &ResidueCycle) -> Self {
        CycleRecord {
            modulus: c.modulus,
            base: c.base,
            preperiod: c.preperiod,
            period: c.period(),
            residues: c.residues.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionRecord {
    pub value: f64,
    pub exact: Option<String>,
    pub iterations: usize,
}

impl From<&Extinction> for ExtinctionRecord {
    fn from(e: &Extinction) -> Self {
        ExtinctionRecord {
            value: e.value,
            exact: e.exact.as_ref().map(rational::format),
            iterations: e.iterations,
        }
    }
}

pub fn series_map(p: &ProbPoly) -> BTreeMap<String, String> {
    p.terms()
        .iter()
        .map(|(k, c)| (k.to_string(), rational::format(c)))
        .collect()
}

/// Flat record of the quotient dynamics over `Z_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModMRecord {
    pub m: usize,
    pub r: usize,
    pub d: usize,
    pub preperiod: usize,
    pub residues: Vec<usize>,
    pub group_members: Vec<usize>,
    pub exists: bool,
    pub a: f64,
    pub limit: Option<Vec<String>>,
    pub accumulation: Vec<Vec<String>>,
    pub cesaro: Vec<String>,
}

fn decimal_strings(p: &LimitPoint) -> Vec<String> {
    p.to_approx().coeffs().iter().map(|c| c.to_string()).collect()
}

impl From<&ModMReport> for ModMRecord {
    fn from(r: &ModMReport) -> Self {
        ModMRecord {
            m: r.m,
            r: r.cycle.base,
            d: r.cycle.period(),
            preperiod: r.cycle.preperiod,
            residues: r.cycle.residues.clone(),
            group_members: r.series_group.members().to_vec(),
            exists: r.exists,
            a: r.extinction.value,
            limit: r.limit.as_ref().map(decimal_strings),
            accumulation: r.accumulation_points().iter().map(decimal_strings).collect(),
            cesaro: decimal_strings(&r.cesaro),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub tol: f64,
    pub max_iter: usize,
    pub extinction_iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitReportRecord {
    pub group: GroupRecord,
    pub input: PointRecord,
    pub series: BTreeMap<String, String>,
    pub pure_power: bool,
    pub stable_point: PointRecord,
    pub reduction_steps: usize,
    pub profile: ProfileRecord,
    pub cycle: CycleRecord,
    pub exists: bool,
    pub limit: Option<LimitPointRecord>,
    pub accumulation: Vec<LimitPointRecord>,
    pub cesaro: LimitPointRecord,
    pub extinction: ExtinctionRecord,
    pub scalar_limits: Option<Vec<f64>>,
    pub diagnostics: DiagnosticsRecord,
}

impl From<&LimitReport> for LimitReportRecord {
    fn from(r: &LimitReport) -> Self {
        LimitReportRecord {
            group: GroupRecord::from(r.group.as_ref()),
            input: PointRecord::from(&r.input),
            series: series_map(&r.series),
            pure_power: r.series.is_pure_power(),
            stable_point: PointRecord::from(&r.stable_point),
            reduction_steps: r.reduction_steps,
            profile: ProfileRecord::from(&r.profile),
            cycle: CycleRecord::from(&r.cycle),
            exists: r.exists,
            limit: r.limit.as_ref().map(LimitPointRecord::from),
            accumulation: r.accumulation_points().iter().map(LimitPointRecord::from).collect(),
            cesaro: LimitPointRecord::from(&r.cesaro),
            extinction: ExtinctionRecord::from(&r.extinction),
            scalar_limits: r.scalar_limits.clone(),
            diagnostics: DiagnosticsRecord {
                tol: r.diagnostics.tol,
                max_iter: r.diagnostics.max_iter,
                extinction_iterations: r.diagnostics.extinction_iterations,
            },
        }
    }
}

/// One row of a scalar trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarRow {
    pub n: usize,
    pub a0: f64,
    pub sup_positive: f64,
    pub tail_mass: f64,
}

impl<T: Scalar> From<&CoeffState<T>> for ScalarRow {
    fn from(s: &CoeffState<T>) -> Self {
        ScalarRow {
            n: s.n,
            a0: s.a0().to_f64(),
            sup_positive: s.sup_positive().to_f64(),
            tail_mass: s.tail_mass.to_f64(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::FiniteGroup;
    use crate::modm::regularity_mod_m;
    use crate::predictor::analyze;
    use crate::profile::profile;
    use crate::rational::q;

    fn roundtrip<T: Serialize + for<'de> Deserialize<'de> + PartialEq + std::fmt::Debug>(value: &T) {
        let text = serde_json::to_string(value).unwrap();
        let back: T = serde_json::from_str(&text).unwrap();
        assert_eq!(&back, value);
    }

    #[test]
    fn reports_roundtrip_through_json() {
        let p = ProbPoly::new([(0, q(1, 4)), (2, q(3, 4))]).unwrap();
        let g = FiniteGroup::symmetric(3).unwrap();
        let x = SimplexPoint::random_interior(&g, 5);
        let rep = analyze(&p, &x).unwrap();
        roundtrip(&LimitReportRecord::from(&rep));
        roundtrip(&ProfileRecord::from(&profile(&x).unwrap()));
        roundtrip(&ModMRecord::from(&regularity_mod_m(&p, 6).unwrap()));
        roundtrip(&GroupRecord::from(g.as_ref()));
    }

    #[test]
    fn exact_strings_parse_back() {
        let g = FiniteGroup::cyclic(4).unwrap();
        let x = SimplexPoint::random_interior(&g, 1);
        let rec = PointRecord::from(&x);
        let parsed: Vec<_> = rec.exact.unwrap().iter().map(|s| rational::parse(s).unwrap()).collect();
        assert_eq!(parsed, x.coeffs());
    }
}
