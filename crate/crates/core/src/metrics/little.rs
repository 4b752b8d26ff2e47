use super::MetricsError;

/// Self-consistency gate on `L = λ W`.
pub const LITTLE_TOLERANCE: f64 = 0.10;

/// Time-average backlog and the departures that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LittleSample {
    pub time_avg_backlog: f64,
    pub departures: u64,
    pub sum_sojourn: f64,
    pub duration: f64,
    /// Typical service time, used to judge whether the run was long enough.
    /// Zero when unknown.
    pub mean_service: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LittleCheck {
    pub relative_error: f64,
    pub no_traffic: bool,
    /// Horizon shorter than ten service times.
    pub low_confidence: bool,
}

impl LittleCheck {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.relative_error < tolerance
    }
}

/// Returns `|L − λ_eff·W| / max(L, ε)` with `λ_eff = departures / duration`.
pub fn littles_law_check(sample: &LittleSample) -> Result<LittleCheck, MetricsError> {
    let low_confidence = sample.mean_service > 0.0 && sample.duration < 10.0 * sample.mean_service;
    if sample.departures == 0 {
        if sample.time_avg_backlog == 0.0 {
            return Ok(LittleCheck {
                relative_error: 0.0,
                no_traffic: true,
                low_confidence,
            });
        }
        return Err(MetricsError::NoDepartures);
    }
    let l = sample.time_avg_backlog;
    let lambda = sample.departures as f64 / sample.duration;
    let w = sample.sum_sojourn / sample.departures as f64;
    let relative_error = (l - lambda * w).abs() / l.max(1e-12);
    Ok(LittleCheck {
        relative_error,
        no_traffic: false,
        low_confidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_balance_has_zero_error() {
        let s = LittleSample {
            time_avg_backlog: 2.0,
            departures: 100,
            sum_sojourn: 200.0,
            duration: 100.0,
            mean_service: 1.0,
        };
        let c = littles_law_check(&s).unwrap();
        assert!(c.relative_error < 1e-12);
        assert!(!c.low_confidence);
    }

    #[test]
    fn zero_traffic_flagged() {
        let c = littles_law_check(&LittleSample::default()).unwrap();
        assert_eq!(c.relative_error, 0.0);
        assert!(c.no_traffic);
    }

    #[test]
    fn short_horizon_is_low_confidence() {
        let s = LittleSample {
            time_avg_backlog: 0.5,
            departures: 3,
            sum_sojourn: 2.0,
            duration: 5.0,
            mean_service: 1.0,
        };
        let c = littles_law_check(&s).unwrap();
        assert!(c.low_confidence);
        assert!((c.relative_error - (0.5f64 - 0.4).abs() / 0.5).abs() < 1e-12);
    }

    #[test]
    fn backlog_without_departures_is_an_error() {
        let s = LittleSample {
            time_avg_backlog: 3.0,
            duration: 5.0,
            ..LittleSample::default()
        };
        assert_eq!(littles_law_check(&s), Err(MetricsError::NoDepartures));
    }
}
