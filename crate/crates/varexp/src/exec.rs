use rayon::prelude::*;
use varexp_core::Executor;

/// Runs units on the rayon pool. Results are collected by index, so output
/// does not depend on the thread count.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl Executor for Rayon {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use varexp_core::engine::{simulate_coupled, simulate_coupled_with};
    use varexp_core::{ExponentSpec, ModelSpec, NamedModel, SimConfig};

    #[test]
    fn matches_sequential() {
        let models = [
            NamedModel::new("gbm", ModelSpec::gbm(0.05, 0.2)),
            NamedModel::new("p1", ModelSpec::new(0.05, 0.2, ExponentSpec::exp_decay(0.005, 0.1))),
        ];
        let mut cfg = SimConfig::new(1.0, 0.01, 64, 1.0);
        cfg.antithetic = true;
        cfg.seed = 9;
        let a = simulate_coupled(&models, &cfg).unwrap();
        let b = simulate_coupled_with(&Rayon, &models, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
