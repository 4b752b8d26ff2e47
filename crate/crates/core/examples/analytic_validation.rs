//! Closed-form priority waits against the single-server simulator.
//!
//! Run with `cargo run --release --example analytic_validation`.

use wsn_prio::queueing::{simulate_single_server, AnalyticModel, Horizon};
use wsn_prio::simcore::PriorityClass;
use wsn_prio::traffic::ClassLoadSpec;

fn main() {
    // Class 0 at 60% load; class 3 ranges from idle to heavily overloaded.
    for rho3 in [0.0, 0.3, 3.0] {
        let model = AnalyticModel::new([
            ClassLoadSpec::exponential(PriorityClass::CRITICAL, 0.6, 1.0).unwrap(),
            ClassLoadSpec::exponential(PriorityClass::PERIODIC, rho3, 1.0).unwrap(),
        ])
        .unwrap();
        let report = simulate_single_server(&model, Horizon::Departures(1_000_000), 7);
        println!("rho3 = {rho3}  residual = {:.4}", model.residual());
        for est in report.classes.iter().filter(|e| e.departures > 0) {
            let analytic = model
                .analytic_wait(est.class)
                .map_or("saturated".to_string(), |w| format!("{w:.4}"));
            println!(
                "  class {}  analytic {:>9}  simulated {:>12.4} +/- {:.4}  ({} served)",
                est.class, analytic, est.mean_wait, est.ci_half_width, est.departures
            );
        }
    }
}
