//! Federated averaging on a synthetic convex task with injected aggregation
//! error.
//!
//! The task is multinomial logistic regression on a Gaussian mixture whose
//! class means are seeded orthogonal directions, so the centralized problem
//! is cleanly learnable and the only experimental variables are the selected
//! device set and the aggregation error. Aggregation error enters the model
//! domain as additive Gaussian noise; for the analog-aggregation model its
//! per-entry variance is the closed-form symbol error divided by `|S|^2`
//! (the averaging post-scale), with all error power placed on the real part.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::aircomp::{aggregation_mse, AircompInstance, Beamformer, PhaseVector};
use crate::rng::{substream, tag};
use crate::{Error, Result};

/// Multinomial logistic model: a (classes x features) weight matrix.
pub type Model = DMatrix<f64>;

/// A labeled sample.
pub type Sample = (DVector<f64>, usize);

/// Synthetic classification task split across devices.
#[derive(Debug, Clone)]
pub struct FlTask {
    pub feature_dim: usize,
    pub num_classes: usize,
    /// Per-device local datasets, uniform size.
    pub device_data: Vec<Vec<Sample>>,
    pub test_set: Vec<Sample>,
    /// Classes present on each device.
    pub device_classes: Vec<Vec<usize>>,
}

/// Radius of the sphere holding the class means (seeded orthogonal
/// directions, so any two means sit `radius * sqrt(2)` apart).
const CLASS_MEAN_RADIUS: f64 = 4.0;
const TEST_SAMPLES_PER_CLASS: usize = 100;

impl FlTask {
    pub fn num_devices(&self) -> usize {
        self.device_data.len()
    }

    pub fn samples_per_device(&self) -> usize {
        self.device_data.first().map_or(0, |d| d.len())
    }
}

/// Build the synthetic task.
///
/// Class `c` draws samples from `N(mu_c, I)` with the means orthonormal
/// seeded directions on a sphere of radius [`CLASS_MEAN_RADIUS`]. With
/// `non_iid` each device holds samples from exactly two classes, otherwise
/// classes are assigned round-robin.
pub fn make_task(
    num_classes: usize,
    feature_dim: usize,
    num_devices: usize,
    samples_per_device: usize,
    non_iid: bool,
    seed: u64,
) -> Result<FlTask> {
    if num_classes < 2 {
        return Err(Error::Config("need at least two classes".into()));
    }
    if feature_dim < num_classes {
        return Err(Error::Config("feature_dim must be >= num_classes".into()));
    }
    if num_devices == 0 || samples_per_device == 0 {
        return Err(Error::Config("need at least one device and one sample".into()));
    }

    // orthonormal class directions via Gram-Schmidt on seeded Gaussians
    let mut rng = substream(seed, &[tag::FL_DATA, 0]);
    let mut means: Vec<DVector<f64>> = Vec::with_capacity(num_classes);
    while means.len() < num_classes {
        let mut v = DVector::from_fn(feature_dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        for m in &means {
            let proj = m.dot(&v);
            v.axpy(-proj, m, 1.0);
        }
        let norm = v.norm();
        if norm > 1e-6 {
            means.push(v / norm);
        }
    }
    for m in &mut means {
        *m *= CLASS_MEAN_RADIUS;
    }

    let draw_sample = |class: usize, rng: &mut rand_chacha::ChaCha12Rng| -> Sample {
        let x = DVector::from_fn(feature_dim, |i, _| {
            means[class][i] + rng.sample::<f64, _>(StandardNormal)
        });
        (x, class)
    };

    let mut device_data = Vec::with_capacity(num_devices);
    let mut device_classes = Vec::with_capacity(num_devices);
    for dev in 0..num_devices {
        let mut dev_rng = substream(seed, &[tag::FL_DATA, 1, dev as u64]);
        let classes: Vec<usize> = if non_iid {
            // two distinct classes per device
            let first = dev_rng.gen_range(0..num_classes);
            let mut second = dev_rng.gen_range(0..num_classes - 1);
            if second >= first {
                second += 1;
            }
            vec![first, second]
        } else {
            (0..num_classes).collect()
        };
        let data: Vec<Sample> = (0..samples_per_device)
            .map(|j| draw_sample(classes[j % classes.len()], &mut dev_rng))
            .collect();
        device_data.push(data);
        device_classes.push(classes);
    }

    let mut test_rng = substream(seed, &[tag::FL_DATA, 2]);
    let test_set: Vec<Sample> = (0..num_classes * TEST_SAMPLES_PER_CLASS)
        .map(|j| draw_sample(j % num_classes, &mut test_rng))
        .collect();

    Ok(FlTask { feature_dim, num_classes, device_data, test_set, device_classes })
}

fn log_softmax(logits: &DVector<f64>) -> DVector<f64> {
    let max = logits.max();
    let log_z = logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln() + max;
    logits.map(|l| l - log_z)
}

/// Average cross-entropy loss over a sample slice.
pub fn loss_on(samples: &[Sample], z: &Model) -> f64 {
    let mut acc = 0.0;
    for (x, y) in samples {
        let logits = z * x;
        acc -= log_softmax(&logits)[*y];
    }
    acc / samples.len() as f64
}

/// Gradient of the average cross-entropy over a sample slice.
pub fn grad_on(samples: &[Sample], z: &Model) -> Model {
    let mut g = DMatrix::zeros(z.nrows(), z.ncols());
    for (x, y) in samples {
        let logits = z * x;
        let log_p = log_softmax(&logits);
        for c in 0..z.nrows() {
            let coef = log_p[c].exp() - if c == *y { 1.0 } else { 0.0 };
            for d in 0..z.ncols() {
                g[(c, d)] += coef * x[d];
            }
        }
    }
    g / samples.len() as f64
}

/// Global training objective: average device loss (uniform local sizes).
pub fn global_loss(task: &FlTask, z: &Model) -> f64 {
    task.device_data.iter().map(|d| loss_on(d, z)).sum::<f64>() / task.num_devices() as f64
}

/// Accuracy on the held-out set.
pub fn test_accuracy(task: &FlTask, z: &Model) -> f64 {
    let mut correct = 0usize;
    for (x, y) in &task.test_set {
        let logits = z * x;
        let pred = (0..task.num_classes)
            .max_by(|&a, &b| logits[a].partial_cmp(&logits[b]).unwrap())
            .unwrap();
        if pred == *y {
            correct += 1;
        }
    }
    correct as f64 / task.test_set.len() as f64
}

/// `steps` full-batch gradient-descent steps on the device's local loss.
pub fn local_update(task: &FlTask, device: usize, z_global: &Model, steps: usize, lr: f64) -> Model {
    let mut z = z_global.clone();
    for _ in 0..steps {
        let g = grad_on(&task.device_data[device], &z);
        z -= g * lr;
    }
    z
}

/// Aggregation error injected at the server.
#[derive(Debug, Clone)]
pub enum ErrorModel {
    /// Exact averaging.
    Ideal,
    /// Mean plus `N(0, sigma0^2 I)`.
    FixedGaussian { sigma0: f64 },
    /// Mean plus Gaussian noise whose per-entry variance is the analog
    /// aggregation error for the given receiver configuration, divided by
    /// `|S|^2`.
    Aircomp { entry_std: f64 },
}

impl ErrorModel {
    /// Build the analog-aggregation variant from a concrete instance; the
    /// per-symbol error is evaluated once.
    pub fn aircomp(instance: &AircompInstance, m: &Beamformer, v: &PhaseVector) -> Result<Self> {
        let report = aggregation_mse(instance, m, v)?;
        if report.degenerate {
            return Err(Error::DegenerateChannel(
                "analog aggregation error is unbounded for this configuration".into(),
            ));
        }
        let s = instance.selected.len() as f64;
        Ok(ErrorModel::Aircomp { entry_std: (report.mse / (s * s)).sqrt() })
    }

    fn entry_std(&self) -> f64 {
        match self {
            ErrorModel::Ideal => 0.0,
            ErrorModel::FixedGaussian { sigma0 } => *sigma0,
            ErrorModel::Aircomp { entry_std } => *entry_std,
        }
    }
}

/// Average the local models and inject the configured error.
pub fn aggregate(models: &[Model], error_model: &ErrorModel, seed: u64, round: usize) -> Result<Model> {
    let Some(first) = models.first() else {
        return Err(Error::Config("aggregate needs at least one model".into()));
    };
    let mut mean = DMatrix::zeros(first.nrows(), first.ncols());
    for m in models {
        if m.nrows() != first.nrows() || m.ncols() != first.ncols() {
            return Err(Error::Dimension("model shapes differ".into()));
        }
        mean += m;
    }
    mean /= models.len() as f64;
    let std = error_model.entry_std();
    if std > 0.0 {
        let mut rng = substream(seed, &[tag::FL_AGG_NOISE, round as u64]);
        for entry in mean.iter_mut() {
            *entry += std * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(mean)
}

/// Round schedule configuration.
#[derive(Debug, Clone)]
pub struct FlRoundConfig {
    pub rounds: usize,
    pub local_steps: usize,
    pub learning_rate: f64,
    pub error_model: ErrorModel,
    /// Participating devices, fixed across rounds.
    pub selected: Vec<usize>,
}

impl FlRoundConfig {
    pub fn validate(&self, task: &FlTask) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.selected.is_empty() {
            return Err(Error::Config("selected set must be nonempty".into()));
        }
        for &i in &self.selected {
            if i >= task.num_devices() {
                return Err(Error::Config(format!("selected device {i} out of range")));
            }
        }
        Ok(())
    }
}

/// Per-round metrics of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct FlRunMetrics {
    pub training_loss: Vec<f64>,
    pub test_accuracy: Vec<f64>,
}

/// Run federated averaging: broadcast, local full-batch descent on each
/// selected device, aggregate with injected error, record the global
/// training objective and held-out accuracy each round.
pub fn run_fl(task: &FlTask, cfg: &FlRoundConfig, seed: u64) -> Result<FlRunMetrics> {
    cfg.validate(task)?;
    let mut z: Model = DMatrix::zeros(task.num_classes, task.feature_dim);
    let mut training_loss = Vec::with_capacity(cfg.rounds);
    let mut accuracy = Vec::with_capacity(cfg.rounds);
    for round in 0..cfg.rounds {
        let locals: Vec<Model> = cfg
            .selected
            .iter()
            .map(|&dev| local_update(task, dev, &z, cfg.local_steps, cfg.learning_rate))
            .collect();
        z = aggregate(&locals, &cfg.error_model, seed, round)?;
        training_loss.push(global_loss(task, &z));
        accuracy.push(test_accuracy(task, &z));
    }
    Ok(FlRunMetrics { training_loss, test_accuracy: accuracy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_task(non_iid: bool, seed: u64) -> FlTask {
        make_task(4, 8, 6, 20, non_iid, seed).unwrap()
    }

    #[test]
    fn iid_single_device_holds_all_classes() {
        let task = make_task(4, 8, 1, 40, false, 3).unwrap();
        let mut seen: Vec<usize> = task.device_data[0].iter().map(|(_, y)| *y).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen, vec![0, 1, 2, 3]);
    }

    #[test]
    fn non_iid_devices_hold_exactly_two_classes() {
        let task = small_task(true, 5);
        for dev in 0..task.num_devices() {
            let mut seen: Vec<usize> =
                task.device_data[dev].iter().map(|(_, y)| *y).collect();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), 2, "device {dev} classes: {seen:?}");
        }
    }

    #[test]
    fn centralized_descent_learns_the_task() {
        // the task is learnable: plain gradient descent on the pooled data
        // reaches 95% held-out accuracy
        let task = make_task(4, 8, 4, 50, false, 11).unwrap();
        let pooled: Vec<Sample> = task.device_data.iter().flatten().cloned().collect();
        let mut z = DMatrix::zeros(task.num_classes, task.feature_dim);
        for _ in 0..200 {
            let g = grad_on(&pooled, &z);
            z -= g * 0.5;
        }
        let acc = test_accuracy(&task, &z);
        assert!(acc >= 0.95, "centralized accuracy {acc}");
    }

    #[test]
    fn local_update_zero_steps_or_zero_lr_is_identity() {
        let task = small_task(false, 7);
        let z = DMatrix::from_fn(task.num_classes, task.feature_dim, |r, c| {
            (r as f64) - 0.3 * (c as f64)
        });
        assert_eq!(local_update(&task, 0, &z, 0, 0.1), z);
        let one_step_zero_lr = {
            let g = grad_on(&task.device_data[0], &z);
            &z - g * 0.0
        };
        assert_eq!(local_update(&task, 0, &z, 1, 0.0), one_step_zero_lr);
    }

    #[test]
    fn one_step_matches_explicit_gradient() {
        let task = small_task(false, 9);
        let z = DMatrix::from_fn(task.num_classes, task.feature_dim, |r, c| {
            0.1 * (r as f64 + 1.0) * (c as f64 - 2.0)
        });
        let lr = 0.07;
        let expect = &z - grad_on(&task.device_data[2], &z) * lr;
        let got = local_update(&task, 2, &z, 1, lr);
        assert_relative_eq!((got - expect).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let task = small_task(true, 13);
        let samples = &task.device_data[1];
        let mut rng = substream(21, &[1]);
        let z = DMatrix::from_fn(task.num_classes, task.feature_dim, |_, _| {
            rng.sample::<f64, _>(StandardNormal) * 0.3
        });
        let g = grad_on(samples, &z);
        let h = 1e-6;
        for _ in 0..100 {
            let r = rng.gen_range(0..task.num_classes);
            let c = rng.gen_range(0..task.feature_dim);
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[(r, c)] += h;
            zm[(r, c)] -= h;
            let fd = (loss_on(samples, &zp) - loss_on(samples, &zm)) / (2.0 * h);
            let denom = g[(r, c)].abs().max(1e-3);
            assert!(
                (fd - g[(r, c)]).abs() / denom <= 1e-5,
                "entry ({r},{c}): fd {fd:e} vs analytic {:e}",
                g[(r, c)]
            );
        }
    }

    #[test]
    fn aggregate_ideal_is_exact_mean() {
        let a = DMatrix::from_element(2, 3, 1.0);
        let b = DMatrix::from_element(2, 3, 3.0);
        let got = aggregate(&[a, b], &ErrorModel::Ideal, 0, 0).unwrap();
        assert_eq!(got, DMatrix::from_element(2, 3, 2.0));
    }

    #[test]
    fn aggregate_singleton_ideal_returns_the_model() {
        let a = DMatrix::from_fn(2, 2, |r, c| (r * 2 + c) as f64);
        let got = aggregate(&[a.clone()], &ErrorModel::Ideal, 1, 5).unwrap();
        assert_eq!(got, a);
    }

    #[test]
    fn aggregate_zero_sigma_is_exact() {
        let a = DMatrix::from_element(1, 4, 2.0);
        let got = aggregate(&[a.clone()], &ErrorModel::FixedGaussian { sigma0: 0.0 }, 3, 0).unwrap();
        assert_eq!(got, a);
    }

    #[test]
    fn injected_noise_variance_matches_sigma0() {
        let sigma0 = 0.3;
        let a = DMatrix::from_element(2, 2, 1.0);
        let rounds = 10_000;
        let mut acc = 0.0;
        for round in 0..rounds {
            let got =
                aggregate(&[a.clone()], &ErrorModel::FixedGaussian { sigma0 }, 17, round).unwrap();
            let e = got - &a;
            acc += e.iter().map(|v| v * v).sum::<f64>() / 4.0;
        }
        let var = acc / rounds as f64;
        assert!(
            (var - sigma0 * sigma0).abs() / (sigma0 * sigma0) < 0.03,
            "sample variance {var}, expected {}",
            sigma0 * sigma0
        );
    }

    #[test]
    fn aggregation_is_unbiased() {
        let a = DMatrix::from_element(1, 2, 5.0);
        let rounds = 10_000;
        let mut mean = DMatrix::zeros(1, 2);
        for round in 0..rounds {
            mean += aggregate(&[a.clone()], &ErrorModel::FixedGaussian { sigma0: 0.5 }, 23, round)
                .unwrap();
        }
        mean /= rounds as f64;
        // standard error of the mean is 0.5/sqrt(rounds)
        let se = 0.5 / (rounds as f64).sqrt();
        for v in mean.iter() {
            assert!((v - 5.0).abs() < 3.0 * se, "mean entry {v}");
        }
    }

    #[test]
    fn run_is_deterministic() {
        let task = small_task(true, 31);
        let cfg = FlRoundConfig {
            rounds: 5,
            local_steps: 2,
            learning_rate: 0.1,
            error_model: ErrorModel::FixedGaussian { sigma0: 0.05 },
            selected: vec![0, 1, 2],
        };
        let a = run_fl(&task, &cfg, 1).unwrap();
        let b = run_fl(&task, &cfg, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ideal_full_participation_loss_decreases() {
        let task = make_task(4, 8, 6, 30, false, 41).unwrap();
        let cfg = FlRoundConfig {
            rounds: 10,
            local_steps: 3,
            learning_rate: 0.2,
            error_model: ErrorModel::Ideal,
            selected: (0..6).collect(),
        };
        let metrics = run_fl(&task, &cfg, 0).unwrap();
        for w in metrics.training_loss.windows(2) {
            assert!(w[1] < w[0], "loss not strictly decreasing: {:?}", metrics.training_loss);
        }
    }

    #[test]
    fn more_devices_and_less_noise_help() {
        // mean final loss over paired seeds: nonincreasing in |S|, and
        // nondecreasing in the injected noise level
        let seeds: Vec<u64> = (0..6).collect();
        let sizes = [2usize, 4, 8];
        let sigmas = [0.0, 0.1];
        let mut finals = vec![vec![0.0f64; sizes.len()]; sigmas.len()];
        for &seed in &seeds {
            let task = make_task(4, 8, 8, 20, true, 100 + seed).unwrap();
            for (si, &sigma0) in sigmas.iter().enumerate() {
                for (ki, &k) in sizes.iter().enumerate() {
                    let cfg = FlRoundConfig {
                        rounds: 15,
                        local_steps: 2,
                        learning_rate: 0.15,
                        error_model: ErrorModel::FixedGaussian { sigma0 },
                        selected: (0..k).collect(),
                    };
                    let metrics = run_fl(&task, &cfg, seed).unwrap();
                    finals[si][ki] += metrics.training_loss.last().unwrap() / seeds.len() as f64;
                }
            }
        }
        for row in &finals {
            for w in row.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "loss not monotone in |S|: {finals:?}");
            }
        }
        for ki in 0..sizes.len() {
            assert!(
                finals[1][ki] >= finals[0][ki] - 1e-9,
                "loss not monotone in sigma0: {finals:?}"
            );
        }
    }
}
