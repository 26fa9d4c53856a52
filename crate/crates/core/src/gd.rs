//! Full-batch gradient descent over a fixed architecture, used as a baseline.

use std::time::Instant;

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{self, init_zero_params, Architecture, Dataset, ParamSet, LOG_EPS};
use crate::report::{FinalState, IterationLog, Method, RunRecord, SolutionResult, StopReason};
use crate::RunRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub arch: Architecture,
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl GdConfig {
    pub fn new(arch: Architecture) -> Self {
        Self {
            arch,
            learning_rate: 0.001,
            iterations: 2_000,
            seed: 42,
        }
    }

    /// A zero learning rate is allowed and leaves the parameters untouched.
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning rate must be nonnegative, got {}",
                self.learning_rate
            )));
        }
        if self.iterations == 0 {
            return Err(Error::config("iterations must be at least 1"));
        }
        Ok(())
    }
}

/// Weights drawn from `N(0, 2 / n_in)`, biases zero.
pub fn he_init<R: rand::Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> ParamSet {
    let mut p = init_zero_params(arch);
    for w in &mut p.weights {
        let scale = (2.0 / w.cols() as f64).sqrt();
        for v in w.as_mut_slice() {
            let z: f64 = StandardNormal.sample(rng);
            *v = scale * z;
        }
    }
    p
}

/// Gradient of the mean cross-entropy cost with respect to every weight and
/// bias. `params` must have exactly the shapes of `arch`.
///
/// Outputs pinned by the log clamp contribute no gradient.
pub fn backprop_grads(
    params: &ParamSet,
    arch: &Architecture,
    x: &Matrix,
    y: &[u8],
) -> Result<ParamSet> {
    if params.dims() != arch.dims() {
        return Err(Error::dim(format!(
            "parameters have dims {:?}, architecture {arch}",
            params.dims()
        )));
    }
    if y.len() != x.cols() {
        return Err(Error::dim(format!(
            "{} labels for {} examples",
            y.len(),
            x.cols()
        )));
    }
    if y.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let trace = model::forward_trace(params, arch, x)?;
    let m = x.cols() as f64;
    let layers = arch.layers();

    let out = &trace.post[layers - 1];
    let mut dz = Matrix::zeros(1, x.cols());
    for (j, (&a, &label)) in out.as_slice().iter().zip(y).enumerate() {
        if a > LOG_EPS && a < 1.0 - LOG_EPS {
            dz.set(0, j, (a - f64::from(label)) / m);
        }
    }

    let mut grads = init_zero_params(arch);
    for l in (0..layers).rev() {
        let a_prev = if l == 0 { x } else { &trace.post[l - 1] };
        let gw = &mut grads.weights[l];
        for r in 0..dz.rows() {
            let dz_row = dz.row(r);
            grads.biases[l][r] = dz_row.iter().sum();
            let gw_row = gw.row_mut(r);
            for (c, g) in gw_row.iter_mut().enumerate() {
                *g = dz_row.iter().zip(a_prev.row(c)).map(|(d, a)| d * a).sum();
            }
        }
        if l == 0 {
            break;
        }
        let w = &params.weights[l];
        let z_prev = &trace.pre[l - 1];
        let mut next = Matrix::zeros(w.cols(), x.cols());
        for c in 0..w.cols() {
            let row = next.row_mut(c);
            for r in 0..w.rows() {
                let wrc = w.get(r, c);
                for (v, d) in row.iter_mut().zip(dz.row(r)) {
                    *v += wrc * d;
                }
            }
            for (v, &z) in row.iter_mut().zip(z_prev.row(c)) {
                if z <= 0.0 {
                    *v = 0.0;
                }
            }
        }
        dz = next;
    }
    Ok(grads)
}

fn log_row(iteration: usize, cost: f64) -> IterationLog {
    IterationLog {
        iteration,
        best_cost: cost,
        leader_best: cost,
        follower_best: None,
        mutation_rate: None,
        swapped: None,
    }
}

/// Trains from a He initialization. Row `i` of the log is the cost after `i`
/// updates, so the log has `iterations + 1` rows.
pub fn gd_train(config: &GdConfig, train: &Dataset, test: Option<&Dataset>) -> Result<RunRecord> {
    config.validate()?;
    for (name, d) in std::iter::once(("training", train)).chain(test.map(|t| ("test", t))) {
        if d.features() != config.arch.input() {
            return Err(Error::config(format!(
                "{name} data has {} features but architecture {} expects {}",
                d.features(),
                config.arch,
                config.arch.input()
            )));
        }
    }
    let start = Instant::now();
    let mut rng = RunRng::seed_from_u64(config.seed);
    let mut params = he_init(&config.arch, &mut rng);
    let mut cost = model::evaluate(&params, &config.arch, train)?;
    let mut record = RunRecord::new(Method::GradientDescent);
    record.log.push(log_row(0, cost));

    for i in 1..=config.iterations {
        let grads = backprop_grads(&params, &config.arch, train.x(), train.y())?;
        for (p, g) in params.values_mut().zip(grads.values()) {
            *p -= config.learning_rate * g;
        }
        let next = model::evaluate(&params, &config.arch, train)?;
        if !next.is_finite() || !params.is_finite() {
            return Err(Error::Numeric {
                iteration: i,
                last_finite_cost: Some(cost),
            });
        }
        cost = next;
        record.log.push(log_row(i, cost));
    }

    let accuracy = |d: &Dataset| -> Result<f64> {
        Ok(model::predict(&params, &config.arch, d.x(), d.y())?.accuracy)
    };
    record.final_state = Some(FinalState {
        leader: vec![SolutionResult {
            arch: config.arch.clone(),
            cost,
            train_accuracy: accuracy(train)?,
            test_accuracy: test.map(accuracy).transpose()?,
        }],
        follower: Vec::new(),
        iterations: config.iterations,
        stop_reason: StopReason::MaxIter,
        wall_time_secs: start.elapsed().as_secs_f64(),
    });
    Ok(record)
}
