use super::{QTable, ValueTable};
use crate::error::{invalid, Result, RlError};
use crate::mdp::Mdp;

/// Default cap on value-iteration sweeps.
pub const MAX_SWEEPS: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct ViResult {
    pub values: ValueTable,
    pub iterations: usize,
    /// `max_s |V_k(s) - V_{k-1}(s)|` of the last sweep.
    pub last_change: f64,
}

/// One synchronous Bellman optimality sweep. Terminal states stay at 0.
pub fn value_iteration_sweep(mdp: &Mdp, values: &[f64]) -> Vec<f64> {
    (0..mdp.num_states())
        .map(|s| {
            if mdp.is_terminal(s) {
                0.0
            } else {
                (0..mdp.num_actions())
                    .map(|a| mdp.backup(values, s, a))
                    .fold(f64::NEG_INFINITY, f64::max)
            }
        })
        .collect()
}

/// `max_s |(T V)(s) - V(s)|` for the Bellman optimality operator `T`.
pub fn bellman_residual(mdp: &Mdp, values: &[f64]) -> f64 {
    value_iteration_sweep(mdp, values)
        .iter()
        .zip(values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Value iteration from `V = 0`, sweeping until the Bellman residual of the
/// returned table is below `threshold`.
pub fn value_iteration(mdp: &Mdp, threshold: f64) -> Result<ViResult> {
    value_iteration_capped(mdp, threshold, MAX_SWEEPS)
}

pub fn value_iteration_capped(mdp: &Mdp, threshold: f64, max_sweeps: usize) -> Result<ViResult> {
    if !(threshold > 0.0) {
        return invalid(format!("threshold {threshold} must be positive"));
    }
    let mut values = vec![0.0; mdp.num_states()];
    let mut change = f64::INFINITY;
    for k in 1..=max_sweeps {
        let next = value_iteration_sweep(mdp, &values);
        change = next
            .iter()
            .zip(&values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        values = next;
        if !change.is_finite() {
            break;
        }
        // the residual of the new table is at most gamma * change; with
        // gamma = 1 it needs its own check
        if change < threshold && (mdp.gamma() < 1.0 || bellman_residual(mdp, &values) < threshold) {
            return Ok(ViResult {
                values: ValueTable { values },
                iterations: k,
                last_change: change,
            });
        }
    }
    Err(RlError::NoConvergence {
        iterations: max_sweeps,
        residual: change,
    })
}

/// One-step lookahead `Q(s, a) = sum_s' T(s'|s,a) [R + gamma V(s')]`;
/// terminal rows are zero.
pub fn q_from_values(mdp: &Mdp, values: &[f64]) -> QTable {
    let mut q = QTable::zeros(mdp.num_states(), mdp.num_actions());
    for s in 0..mdp.num_states() {
        if mdp.is_terminal(s) {
            continue;
        }
        for a in 0..mdp.num_actions() {
            q.set(s, a, mdp.backup(values, s, a));
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{Environment, Taxi};
    use crate::mdp::MdpBuilder;

    #[test]
    fn geometric_self_loop() {
        let mut b = MdpBuilder::new(1, 1, 0.5);
        b.set_deterministic(0, 0, 0, 1.0);
        let mdp = b.build().unwrap();
        let r = value_iteration(&mdp, 1e-12).unwrap();
        assert!((r.values.get(0) - 2.0).abs() < 1e-11);
    }

    #[test]
    fn one_step_episode() {
        let mut b = MdpBuilder::new(2, 1, 0.9);
        b.set_deterministic(0, 0, 1, 5.0);
        b.set_terminal(1);
        let mdp = b.build().unwrap();
        let r = value_iteration(&mdp, 1e-10).unwrap();
        assert_eq!(r.values.values, vec![5.0, 0.0]);
    }

    #[test]
    fn episodic_undiscounted_chain() {
        let mut b = MdpBuilder::new(3, 2, 1.0).episodic(true);
        b.set_deterministic(0, 0, 1, -1.0);
        b.set_deterministic(0, 1, 2, -5.0);
        b.set_deterministic(1, 0, 2, -1.0);
        b.set_deterministic(1, 1, 0, -1.0);
        b.set_terminal(2);
        let mdp = b.build().unwrap();
        let r = value_iteration(&mdp, 1e-9).unwrap();
        assert_eq!(r.values.values, vec![-2.0, -1.0, 0.0]);
    }

    #[test]
    fn reports_non_convergence() {
        let mut b = MdpBuilder::new(1, 1, 0.999);
        b.set_deterministic(0, 0, 0, 1.0);
        let mdp = b.build().unwrap();
        let err = value_iteration_capped(&mdp, 1e-12, 10).unwrap_err();
        match err {
            RlError::NoConvergence { iterations, residual } => {
                assert_eq!(iterations, 10);
                assert!(residual > 0.9);
            }
            other => panic!("{other:?}"),
        }
        assert!(value_iteration(&mdp, 0.0).is_err());
    }

    #[test]
    fn sweeps_contract_toward_the_fixed_point() {
        let mdp = Taxi::new().exact_model().unwrap();
        let star = value_iteration(&mdp, 1e-13).unwrap().values.values;
        let dist = |v: &[f64]| v.iter().zip(&star).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let mut v = vec![0.0; mdp.num_states()];
        for _ in 0..300 {
            let next = value_iteration_sweep(&mdp, &v);
            assert!(dist(&next) <= mdp.gamma() * dist(&v) + 1e-12);
            v = next;
        }
    }

    #[test]
    fn lookahead_agrees_with_values() {
        let mdp = Taxi::new().exact_model().unwrap();
        let vi = value_iteration(&mdp, 1e-10).unwrap();
        let q = q_from_values(&mdp, &vi.values.values);
        for s in 0..mdp.num_states() {
            assert!((q.max(s) - vi.values.get(s)).abs() < 1e-8 || mdp.is_terminal(s));
        }
    }
}
