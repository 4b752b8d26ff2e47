use thiserror::Error;

use crate::simcore::PriorityClass;
use crate::traffic::ClassLoadSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueueingError {
    #[error("class {class} is saturated: cumulative load {load} >= 1")]
    Saturated { class: PriorityClass, load: f64 },
    #[error("duplicate load spec for class {0}")]
    DuplicateClass(PriorityClass),
}

/// Offered load of one class, `λ · E[s]`.
pub fn utilization(spec: &ClassLoadSpec) -> f64 {
    spec.lambda_pps * spec.mean_service_s
}

/// Closed-form mean waiting times of a non-preemptive priority M/G/1 queue.
///
/// For class `n` with cumulative loads `σ_n = Σ_{j≤n} ρ_j`:
///
/// ```text
/// R      = ½ Σ_i λ_i E[s_i²]
/// E[W_n] = R / ((1 − σ_{n−1}) (1 − σ_n))
/// ```
///
/// When some class saturates the server never idles, so the residual term
/// uses carried rather than offered load: classes above the first saturated
/// one keep their ρ, the first saturated class takes the remaining capacity,
/// and the rest carry nothing. With no saturated class this is the usual R.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticModel {
    specs: [Option<ClassLoadSpec>; PriorityClass::COUNT],
}

impl AnalyticModel {
    pub fn new(specs: impl IntoIterator<Item = ClassLoadSpec>) -> Result<Self, QueueingError> {
        let mut slots: [Option<ClassLoadSpec>; PriorityClass::COUNT] = [None; PriorityClass::COUNT];
        for s in specs {
            let slot = &mut slots[s.class.index()];
            if slot.is_some() {
                return Err(QueueingError::DuplicateClass(s.class));
            }
            *slot = Some(s);
        }
        Ok(AnalyticModel { specs: slots })
    }

    pub fn spec(&self, class: PriorityClass) -> Option<&ClassLoadSpec> {
        self.specs[class.index()].as_ref()
    }

    pub fn specs(&self) -> impl Iterator<Item = &ClassLoadSpec> {
        self.specs.iter().flatten()
    }

    pub fn rho(&self, class: PriorityClass) -> f64 {
        self.spec(class).map_or(0.0, utilization)
    }

    /// `Σ_{j≤n} ρ_j`; class `n` is saturated iff this is `>= 1`.
    pub fn saturation_point(&self, class: PriorityClass) -> f64 {
        PriorityClass::ALL[..=class.index()]
            .iter()
            .map(|&c| self.rho(c))
            .sum()
    }

    pub fn is_saturated(&self, class: PriorityClass) -> bool {
        self.saturation_point(class) >= 1.0
    }

    /// Long-run fraction of time the server spends on each class.
    pub fn carried_load(&self) -> [f64; PriorityClass::COUNT] {
        let mut carried = [0.0; PriorityClass::COUNT];
        let mut cum: f64 = 0.0;
        for c in PriorityClass::ALL {
            let rho = self.rho(c);
            carried[c.index()] = rho.min((1.0 - cum).max(0.0));
            cum += rho;
        }
        carried
    }

    /// Mean residual service time seen by an arrival.
    pub fn residual(&self) -> f64 {
        let carried = self.carried_load();
        self.specs()
            .map(|s| 0.5 * carried[s.class.index()] * s.second_moment_service_s2 / s.mean_service_s)
            .sum()
    }

    pub fn analytic_wait(&self, class: PriorityClass) -> Result<f64, QueueingError> {
        let upto = self.saturation_point(class);
        if upto >= 1.0 {
            return Err(QueueingError::Saturated { class, load: upto });
        }
        let before = upto - self.rho(class);
        Ok(self.residual() / ((1.0 - before) * (1.0 - upto)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp(class: u8, lambda: f64, mean: f64) -> ClassLoadSpec {
        ClassLoadSpec::exponential(PriorityClass::new(class).unwrap(), lambda, mean).unwrap()
    }

    #[test]
    fn utilization_products() {
        assert_eq!(utilization(&exp(0, 0.5, 1.0)), 0.5);
        assert_eq!(utilization(&exp(0, 0.0, 1.0)), 0.0);
        assert!((utilization(&exp(0, 2.0, 0.6)) - 1.2).abs() < 1e-12);
    }

    #[test]
    fn empty_system_waits_zero() {
        let m = AnalyticModel::new((0..4).map(|c| exp(c, 0.0, 1.0))).unwrap();
        for c in PriorityClass::ALL {
            assert_eq!(m.analytic_wait(c).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_class_matches_mm1() {
        let m = AnalyticModel::new([exp(0, 0.5, 1.0)]).unwrap();
        let w = m.analytic_wait(PriorityClass::CRITICAL).unwrap();
        // M/M/1 queueing delay ρ/(μ−λ)
        assert!((w - 0.5 / (1.0 - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn two_class_values() {
        let m = AnalyticModel::new([exp(0, 0.25, 1.0), exp(1, 0.25, 1.0)]).unwrap();
        assert!((m.residual() - 0.5).abs() < 1e-12);
        assert!((m.analytic_wait(PriorityClass::CRITICAL).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.analytic_wait(PriorityClass::REAL_TIME).unwrap() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn class_zero_at_unit_load_saturates_everyone() {
        let m = AnalyticModel::new([exp(0, 1.0, 1.0), exp(2, 0.1, 1.0)]).unwrap();
        for c in PriorityClass::ALL {
            assert!(matches!(m.analytic_wait(c), Err(QueueingError::Saturated { .. })));
        }
    }

    #[test]
    fn saturation_points() {
        let m = AnalyticModel::new((0..4).map(|c| exp(c, 0.3, 1.0))).unwrap();
        assert!((m.saturation_point(PriorityClass::REAL_TIME) - 0.6).abs() < 1e-12);
        assert!(!m.is_saturated(PriorityClass::REAL_TIME));
        assert!((m.saturation_point(PriorityClass::PERIODIC) - 1.2).abs() < 1e-12);
        assert!(m.is_saturated(PriorityClass::PERIODIC));

        let m = AnalyticModel::new([exp(0, 0.99, 1.0), exp(3, 10.0, 1.0)]).unwrap();
        assert!((m.saturation_point(PriorityClass::CRITICAL) - 0.99).abs() < 1e-12);
        assert!(m.analytic_wait(PriorityClass::CRITICAL).is_ok());

        let m = AnalyticModel::new([exp(1, 0.0, 1.0)]).unwrap();
        assert!(PriorityClass::ALL.iter().all(|&c| m.saturation_point(c) == 0.0));
    }

    #[test]
    fn carried_load_caps_at_unit() {
        let m = AnalyticModel::new([exp(0, 0.6, 1.0), exp(3, 3.0, 1.0)]).unwrap();
        let carried = m.carried_load();
        assert!((carried[0] - 0.6).abs() < 1e-12);
        assert!((carried[3] - 0.4).abs() < 1e-12);
        // exponential service: ½·ρ·E[s²]/E[s] = ρ·E[s]
        assert!((m.residual() - 1.0).abs() < 1e-12);
        assert!((m.analytic_wait(PriorityClass::CRITICAL).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn duplicate_class_rejected() {
        assert!(AnalyticModel::new([exp(0, 0.1, 1.0), exp(0, 0.1, 1.0)]).is_err());
    }
}
