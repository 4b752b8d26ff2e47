use std::collections::VecDeque;

use rand_distr::{Distribution, Gamma};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::analytic::AnalyticModel;
use crate::metrics::LittleSample;
use crate::simcore::{PriorityClass, RngStream, StreamId};
use crate::traffic::ClassLoadSpec;

const BATCHES: usize = 20;

/// Service-time law matched to a spec's first two moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServiceDist {
    Deterministic(f64),
    Exponential(f64),
    Gamma { shape: f64, scale: f64 },
}

impl ServiceDist {
    pub fn from_spec(spec: &ClassLoadSpec) -> Self {
        let m = spec.mean_service_s;
        let var = spec.variance();
        if var <= 1e-12 * m * m {
            ServiceDist::Deterministic(m)
        } else if (var - m * m).abs() <= 1e-9 * m * m {
            ServiceDist::Exponential(m)
        } else {
            ServiceDist::Gamma {
                shape: m * m / var,
                scale: var / m,
            }
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match *self {
            ServiceDist::Deterministic(m) => m,
            ServiceDist::Exponential(m) => rng.next_exp(1.0 / m),
            ServiceDist::Gamma { shape, scale } => Gamma::new(shape, scale)
                .expect("shape and scale are positive")
                .sample(rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Stop after this many customers have left the waiting line.
    Departures(u64),
    /// Stop at this simulated time.
    Time(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassEstimate {
    pub class: PriorityClass,
    pub departures: u64,
    pub mean_wait: f64,
    /// 95% half-width from batch means; NaN when too few batches had data.
    pub ci_half_width: f64,
    /// Set when the closed form says this class has no steady state.
    pub divergent: bool,
    pub little: LittleSample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleServerReport {
    pub classes: Vec<ClassEstimate>,
    pub total_departures: u64,
    pub duration: f64,
}

impl SingleServerReport {
    pub fn class(&self, class: PriorityClass) -> Option<&ClassEstimate> {
        self.classes.iter().find(|c| c.class == class)
    }
}

#[derive(Default, Clone)]
struct ClassState {
    active: bool,
    next_arrival: f64,
    queue: VecDeque<f64>,
    area: f64,
    sum_wait: f64,
    departures: u64,
    batch_sum: [f64; BATCHES],
    batch_n: [u64; BATCHES],
}

/// Event-driven single-server non-preemptive priority queue. Waits are
/// measured from arrival to service start.
pub fn simulate_single_server(model: &AnalyticModel, horizon: Horizon, seed: u64) -> SingleServerReport {
    let mut arrivals: Vec<RngStream> = PriorityClass::ALL
        .iter()
        .map(|&class| {
            RngStream::new(
                seed,
                StreamId::Traffic {
                    node: crate::simcore::NodeId(0),
                    class,
                },
            )
        })
        .collect();
    let mut services: Vec<RngStream> = PriorityClass::ALL
        .iter()
        .map(|&c| RngStream::new(seed, StreamId::Service(c)))
        .collect();
    let dists: Vec<Option<ServiceDist>> = PriorityClass::ALL
        .iter()
        .map(|&c| model.spec(c).map(ServiceDist::from_spec))
        .collect();

    let mut st: Vec<ClassState> = vec![ClassState::default(); PriorityClass::COUNT];
    for c in PriorityClass::ALL {
        let s = &mut st[c.index()];
        match model.spec(c) {
            Some(spec) if spec.lambda_pps > 0.0 => {
                s.active = true;
                s.next_arrival = arrivals[c.index()].next_exp(spec.lambda_pps);
            }
            _ => s.next_arrival = f64::INFINITY,
        }
    }

    let mut now = 0.0f64;
    let mut busy_until: Option<f64> = None;
    let mut total = 0u64;
    let batch_of = |total: u64, now: f64| -> usize {
        let b = match horizon {
            Horizon::Departures(n) => (total as u128 * BATCHES as u128 / n.max(1) as u128) as usize,
            Horizon::Time(t) => (now / t * BATCHES as f64) as usize,
        };
        b.min(BATCHES - 1)
    };
    let done = |total: u64, t: f64| match horizon {
        Horizon::Departures(n) => total >= n,
        Horizon::Time(end) => t > end,
    };

    loop {
        let (arr_idx, t_arr) = st
            .iter()
            .enumerate()
            .map(|(i, s)| (i, s.next_arrival))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("four classes");
        let t_dep = busy_until.unwrap_or(f64::INFINITY);
        let t_next = t_arr.min(t_dep);
        if !t_next.is_finite() || done(total, t_next) {
            if let Horizon::Time(end) = horizon {
                if end > now {
                    for s in st.iter_mut() {
                        s.area += s.queue.len() as f64 * (end - now);
                    }
                    now = end;
                }
            }
            break;
        }
        for s in st.iter_mut() {
            s.area += s.queue.len() as f64 * (t_next - now);
        }
        now = t_next;

        if t_arr < t_dep {
            let spec = model.spec(PriorityClass::ALL[arr_idx]).expect("active class has a spec");
            let s = &mut st[arr_idx];
            s.queue.push_back(now);
            s.next_arrival = now + arrivals[arr_idx].next_exp(spec.lambda_pps);
        } else {
            busy_until = None;
        }

        if busy_until.is_none() {
            if let Some(c) = st.iter().position(|s| !s.queue.is_empty()) {
                let b = batch_of(total, now);
                let s = &mut st[c];
                let arrived = s.queue.pop_front().expect("non-empty");
                let wait = now - arrived;
                s.sum_wait += wait;
                s.departures += 1;
                s.batch_sum[b] += wait;
                s.batch_n[b] += 1;
                total += 1;
                let service = dists[c].expect("queued class has a spec").sample(&mut services[c]);
                busy_until = Some(now + service);
            }
        }
    }

    let classes = PriorityClass::ALL
        .iter()
        .zip(st.iter())
        .filter(|(c, s)| s.active || model.spec(**c).is_some())
        .map(|(&class, s)| {
            let mean_wait = if s.departures > 0 {
                s.sum_wait / s.departures as f64
            } else {
                0.0
            };
            ClassEstimate {
                class,
                departures: s.departures,
                mean_wait,
                ci_half_width: batch_half_width(&s.batch_sum, &s.batch_n),
                divergent: model.is_saturated(class) && s.active,
                little: LittleSample {
                    time_avg_backlog: if now > 0.0 { s.area / now } else { 0.0 },
                    departures: s.departures,
                    sum_sojourn: s.sum_wait,
                    duration: now,
                    mean_service: model.spec(class).map_or(0.0, |sp| sp.mean_service_s),
                },
            }
        })
        .collect();

    SingleServerReport {
        classes,
        total_departures: total,
        duration: now,
    }
}

fn batch_half_width(sums: &[f64; BATCHES], counts: &[u64; BATCHES]) -> f64 {
    let means: Vec<f64> = sums
        .iter()
        .zip(counts)
        .filter(|(_, &n)| n > 0)
        .map(|(s, &n)| s / n as f64)
        .collect();
    let k = means.len();
    if k < 2 {
        return f64::NAN;
    }
    let mean = means.iter().sum::<f64>() / k as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (k - 1) as f64)
        .expect("positive dof")
        .inverse_cdf(0.975);
    t * (var / k as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::ClassLoadSpec;

    #[test]
    fn idle_system_has_no_departures() {
        let m = AnalyticModel::new([ClassLoadSpec::exponential(PriorityClass::CRITICAL, 0.0, 1.0).unwrap()]).unwrap();
        let r = simulate_single_server(&m, Horizon::Time(100.0), 1);
        assert_eq!(r.total_departures, 0);
        assert_eq!(r.classes[0].mean_wait, 0.0);
    }

    #[test]
    fn md1_matches_pollaczek_khinchine() {
        let m = AnalyticModel::new([ClassLoadSpec::deterministic(PriorityClass::CRITICAL, 0.5, 1.0).unwrap()]).unwrap();
        let r = simulate_single_server(&m, Horizon::Departures(1_000_000), 3);
        let w = r.classes[0].mean_wait;
        assert!((w - 0.5).abs() / 0.5 < 0.05, "M/D/1 wait {w}");
    }

    #[test]
    fn service_dist_from_moments() {
        let det = ClassLoadSpec::deterministic(PriorityClass::CRITICAL, 1.0, 2.0).unwrap();
        assert_eq!(ServiceDist::from_spec(&det), ServiceDist::Deterministic(2.0));
        let exp = ClassLoadSpec::exponential(PriorityClass::CRITICAL, 1.0, 2.0).unwrap();
        assert_eq!(ServiceDist::from_spec(&exp), ServiceDist::Exponential(2.0));
        let g = ClassLoadSpec::new(PriorityClass::CRITICAL, 1.0, 1.0, 1.5, crate::traffic::SizeDist::Fixed(1)).unwrap();
        assert_eq!(ServiceDist::from_spec(&g), ServiceDist::Gamma { shape: 2.0, scale: 0.5 });
    }

    #[test]
    fn replays_bit_for_bit() {
        let m = AnalyticModel::new([
            ClassLoadSpec::exponential(PriorityClass::CRITICAL, 0.3, 1.0).unwrap(),
            ClassLoadSpec::exponential(PriorityClass::PERIODIC, 0.3, 1.0).unwrap(),
        ])
        .unwrap();
        let a = simulate_single_server(&m, Horizon::Departures(10_000), 8);
        let b = simulate_single_server(&m, Horizon::Departures(10_000), 8);
        assert_eq!(a, b);
    }
}
