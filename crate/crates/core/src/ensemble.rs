//! Monte Carlo estimation of `C_Iz(t)`, the MASH spin histogram and the
//! microscopic-reversibility error.
//!
//! Trajectory `i` draws from a ChaCha8 stream `i` of the master seed, and
//! trajectories are grouped into fixed index blocks whose sums are reduced
//! in block order. Results are therefore bit-identical for any number of
//! worker threads. Standard errors come from the delete-one-block
//! jackknife; for a plain mean with equal blocks this is the batch-means
//! error.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dynamics::{sample_nuclear, IntegratorConfig, Propagator, Status, TrajectoryState};
use crate::error::{Error, Result};
use crate::mapping::{
    observable_value, sample_initial, sign, sqc_identity_value, ForceRule, InitialOperator, Method, ELECTRONIC_TRACE,
};
use crate::models::{BathSpec, TwoLevelModel};

/// Upper bound on the number of jackknife blocks.
pub const MAX_BLOCKS: usize = 200;

/// Fraction of the sample times averaged for the long-time value.
pub const LONG_TIME_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub method: Method,
    pub model: TwoLevelModel,
    pub bath: BathSpec,
    pub integrator: IntegratorConfig,
    pub n_traj: usize,
    pub master_seed: u64,
    pub sample_times: Vec<f64>,
}

impl EnsembleConfig {
    /// Sample times every `interval` from 0 to `t_max`.
    pub fn uniform_times(t_max: f64, interval: f64) -> Vec<f64> {
        let n = (t_max / interval + 1e-9).floor() as usize;
        (0..=n).map(|k| k as f64 * interval).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.bath.validate()?;
        self.integrator.validate()?;
        if self.n_traj == 0 {
            return Err(Error::invalid("ntraj", "must be >= 1"));
        }
        if !self.method.has_dynamics() {
            return Err(Error::UnsupportedMethod(self.method));
        }
        if self.sample_times.is_empty() {
            return Err(Error::invalid("sample_times", "must not be empty"));
        }
        let t_max = self.integrator.t_max;
        let mut prev = f64::NEG_INFINITY;
        for &t in &self.sample_times {
            if !(t >= 0.0 && t <= t_max * (1.0 + 1e-12)) {
                return Err(Error::invalid("sample_times", format!("{t} outside [0, {t_max}]")));
            }
            if t < prev {
                return Err(Error::invalid("sample_times", "must be sorted"));
            }
            prev = t;
        }
        Ok(())
    }

    /// Step indices of the sample times.
    fn sample_steps(&self) -> Vec<usize> {
        self.sample_times
            .iter()
            .map(|t| (t / self.integrator.dt).round() as usize)
            .collect()
    }

    fn blocks(&self) -> Vec<(usize, usize)> {
        let n_blocks = self.n_traj.min(MAX_BLOCKS);
        (0..n_blocks)
            .map(|b| (b * self.n_traj / n_blocks, (b + 1) * self.n_traj / n_blocks))
            .collect()
    }
}

fn trajectory_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng
}

/// One trajectory with its initial weight.
struct Walker {
    state: TrajectoryState,
    rng: ChaCha8Rng,
    weight: f64,
    s_z0: f64,
    r0: f64,
    step: usize,
}

impl Walker {
    fn start(cfg: &EnsembleConfig, prop: &Propagator, index: usize) -> Result<Self> {
        let mut rng = trajectory_rng(cfg.master_seed, index);
        let (x, p) = sample_nuclear(&cfg.bath, &mut rng);
        let init = sample_initial(&cfg.method.spec(), InitialOperator::HalfIdentity, &mut rng)?;
        Ok(Walker {
            state: prop.state(&init.state, x, p),
            rng,
            weight: init.weight,
            s_z0: init.state.s_z(),
            r0: init.state.r,
            step: 0,
        })
    }

    /// `(r, S_z^ad)`, exactly the sampled values before the first step.
    fn radius_and_s_z(&self) -> (f64, f64) {
        if self.step == 0 {
            (self.r0, self.s_z0)
        } else {
            self.state.radius_and_s_z()
        }
    }

    fn advance_to(&mut self, prop: &Propagator, rule: ForceRule, step: usize) {
        while self.step < step {
            if self.state.status == Status::Diverged {
                self.step = step;
                break;
            }
            prop.step(rule, &mut self.state, &mut self.rng);
            self.step += 1;
        }
    }
}

/// Per-block sums at each sample time.
#[derive(Debug, Clone, Default, PartialEq)]
struct BlockSums {
    n: f64,
    /// All trajectories, diverged ones frozen at their last state.
    num: Vec<f64>,
    den: Vec<f64>,
    /// Trajectories still running at the sample time.
    n_live: Vec<f64>,
    num_live: Vec<f64>,
    den_live: Vec<f64>,
    n_diverged: usize,
}

impl BlockSums {
    fn new(n_times: usize) -> Self {
        BlockSums {
            n: 0.0,
            num: vec![0.0; n_times],
            den: vec![0.0; n_times],
            n_live: vec![0.0; n_times],
            num_live: vec![0.0; n_times],
            den_live: vec![0.0; n_times],
            n_diverged: 0,
        }
    }
}

fn run_block(cfg: &EnsembleConfig, prop: &Propagator, steps: &[usize], range: (usize, usize)) -> Result<BlockSums> {
    let spec = cfg.method.spec();
    let mut sums = BlockSums::new(steps.len());
    for index in range.0..range.1 {
        let mut w = Walker::start(cfg, prop, index)?;
        for (j, &k) in steps.iter().enumerate() {
            w.advance_to(prop, spec.force_rule, k);
            let (r, s_z) = w.radius_and_s_z();
            let num = w.weight * observable_value(cfg.method, r, s_z);
            let den = match cfg.method {
                Method::Sqc => w.weight * sqc_identity_value(r, s_z),
                _ => w.weight,
            };
            sums.num[j] += num;
            sums.den[j] += den;
            if w.state.status == Status::Running {
                sums.n_live[j] += 1.0;
                sums.num_live[j] += num;
                sums.den_live[j] += den;
            }
        }
        sums.n += 1.0;
        if w.state.status == Status::Diverged {
            sums.n_diverged += 1;
        }
    }
    Ok(sums)
}

/// Estimate and jackknife error of `f` applied to totals, given block data.
fn jackknife(blocks: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let dim = blocks[0].len();
    let mut total = vec![0.0; dim];
    for b in blocks {
        for (t, v) in total.iter_mut().zip(b) {
            *t += v;
        }
    }
    let value = f(&total);
    let n = blocks.len();
    if n < 2 {
        return (value, f64::NAN);
    }
    let mut rest = vec![0.0; dim];
    let leave_out: Vec<f64> = blocks
        .iter()
        .map(|b| {
            for ((r, t), v) in rest.iter_mut().zip(&total).zip(b) {
                *r = t - v;
            }
            f(&rest)
        })
        .collect();
    let mean = leave_out.iter().sum::<f64>() / n as f64;
    let var = leave_out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (n - 1) as f64 / n as f64;
    (value, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationSeries {
    pub method: Method,
    pub n_traj: usize,
    pub times: Vec<f64>,
    /// Inclusive estimate: diverged trajectories keep their frozen state.
    pub c_values: Vec<f64>,
    pub std_errs: Vec<f64>,
    /// Estimate over trajectories still running at each time.
    pub c_values_live: Vec<f64>,
    pub std_errs_live: Vec<f64>,
    pub n_live: Vec<usize>,
    pub n_diverged: usize,
    /// SQC only: windowed identity `2⟨w 𝓘(t)⟩`.
    pub renormalization_denominator: Option<Vec<f64>>,
    #[serde(skip)]
    blocks: Vec<BlockSums>,
}

impl CorrelationSeries {
    pub fn has_diverged(&self) -> bool {
        self.n_diverged > 0
    }

    /// Average over the final quarter of the sample times with its
    /// jackknife error; inclusive estimate.
    pub fn long_time_average(&self) -> (f64, f64) {
        self.tail_average(LONG_TIME_FRACTION)
    }

    pub fn tail_average(&self, fraction: f64) -> (f64, f64) {
        let n_t = self.times.len();
        let first = ((1.0 - fraction) * (n_t - 1) as f64).round() as usize;
        let idx: Vec<usize> = (first..n_t).collect();
        let sqc = self.method == Method::Sqc;
        let data: Vec<Vec<f64>> = self
            .blocks
            .iter()
            .map(|b| {
                let mut row = vec![b.n];
                for &j in &idx {
                    row.push(b.num[j]);
                    row.push(b.den[j]);
                }
                row
            })
            .collect();
        jackknife(&data, |tot| {
            let mut acc = 0.0;
            for k in 0..idx.len() {
                let (num, den) = (tot[1 + 2 * k], tot[2 + 2 * k]);
                acc += if sqc { num / den } else { ELECTRONIC_TRACE * num / tot[0] };
            }
            acc / idx.len() as f64
        })
    }
}

pub fn estimate_correlation(cfg: &EnsembleConfig) -> Result<CorrelationSeries> {
    cfg.validate()?;
    let prop = Propagator::new(cfg.model, cfg.bath, cfg.integrator)?;
    let steps = cfg.sample_steps();
    let blocks: Vec<BlockSums> = cfg
        .blocks()
        .into_par_iter()
        .map(|range| run_block(cfg, &prop, &steps, range))
        .collect::<Result<_>>()?;

    let n_t = steps.len();
    let sqc = cfg.method == Method::Sqc;
    let mut c_values = Vec::with_capacity(n_t);
    let mut std_errs = Vec::with_capacity(n_t);
    let mut c_live = Vec::with_capacity(n_t);
    let mut e_live = Vec::with_capacity(n_t);
    let mut n_live = Vec::with_capacity(n_t);
    let mut denominators = Vec::with_capacity(n_t);
    let estimator = |tot: &[f64]| {
        if sqc {
            tot[1] / tot[2]
        } else {
            ELECTRONIC_TRACE * tot[1] / tot[0]
        }
    };
    for j in 0..n_t {
        let live: f64 = blocks.iter().map(|b| b.n_live[j]).sum();
        if live == 0.0 {
            return Err(Error::AllDiverged { t: cfg.sample_times[j] });
        }
        let all: Vec<Vec<f64>> = blocks.iter().map(|b| vec![b.n, b.num[j], b.den[j]]).collect();
        let (c, e) = jackknife(&all, estimator);
        c_values.push(c);
        std_errs.push(e);
        let kept: Vec<Vec<f64>> = blocks
            .iter()
            .filter(|b| b.n_live[j] > 0.0)
            .map(|b| vec![b.n_live[j], b.num_live[j], b.den_live[j]])
            .collect();
        let (c, e) = jackknife(&kept, estimator);
        c_live.push(c);
        e_live.push(e);
        n_live.push(live as usize);
        let n: f64 = blocks.iter().map(|b| b.n).sum();
        denominators.push(ELECTRONIC_TRACE * blocks.iter().map(|b| b.den[j]).sum::<f64>() / n);
    }
    Ok(CorrelationSeries {
        method: cfg.method,
        n_traj: cfg.n_traj,
        times: cfg.sample_times.clone(),
        c_values,
        std_errs,
        c_values_live: c_live,
        std_errs_live: e_live,
        n_live,
        n_diverged: blocks.iter().map(|b| b.n_diverged).sum(),
        renormalization_denominator: sqc.then_some(denominators),
        blocks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpinHistogram {
    pub t: f64,
    pub centers: Vec<f64>,
    /// Weighted density on `[−1, 1]` with unit total mass.
    pub density: Vec<f64>,
    pub std_errs: Vec<f64>,
    pub mass_lower: f64,
    pub mass_upper: f64,
    /// χ² p-values of within-hemisphere flatness, lower then upper.
    pub flatness_p: (f64, f64),
}

fn flatness_p_value(mass: &[f64], var: &[f64]) -> f64 {
    let k = mass.len();
    if k < 2 {
        return 1.0;
    }
    // Weighted χ² against the inverse-variance mean level.
    let inv: Vec<f64> = var.iter().map(|v| if *v > 0.0 { 1.0 / v } else { 0.0 }).collect();
    let norm: f64 = inv.iter().sum();
    if norm == 0.0 {
        return 1.0;
    }
    let level = mass.iter().zip(&inv).map(|(m, i)| m * i).sum::<f64>() / norm;
    let chi2: f64 = mass.iter().zip(&inv).map(|(m, i)| (m - level).powi(2) * i).sum();
    let dist = ChiSquared::new((k - 1) as f64).expect("k >= 2");
    1.0 - dist.cdf(chi2)
}

/// Weighted histogram of `S_z^ad(t)` over a MASH ensemble. `n_bins` must
/// be even so that no bin straddles the equator.
pub fn histogram_sz(cfg: &EnsembleConfig, t: f64, n_bins: usize) -> Result<SpinHistogram> {
    if cfg.method != Method::Mash {
        return Err(Error::UnsupportedMethod(cfg.method));
    }
    if n_bins < 2 || !n_bins.is_multiple_of(2) {
        return Err(Error::invalid("bins", "must be even and >= 2"));
    }
    let mut cfg = cfg.clone();
    cfg.integrator.t_max = cfg.integrator.t_max.max(t);
    cfg.sample_times = vec![t];
    cfg.validate()?;
    let prop = Propagator::new(cfg.model, cfg.bath, cfg.integrator)?;
    let step = cfg.sample_steps()[0];
    let width = 2.0 / n_bins as f64;
    // Each block returns (Σw per bin, Σw² per bin, Σw).
    let blocks: Vec<(Vec<f64>, Vec<f64>, f64)> = cfg
        .blocks()
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut sw = vec![0.0; n_bins];
            let mut sw2 = vec![0.0; n_bins];
            let mut total = 0.0;
            for index in lo..hi {
                let mut w = Walker::start(&cfg, &prop, index)?;
                w.advance_to(&prop, ForceRule::MashWindowed, step);
                let (_, s_z) = w.radius_and_s_z();
                let bin = (((s_z + 1.0) / width) as usize).min(n_bins - 1);
                sw[bin] += w.weight;
                sw2[bin] += w.weight * w.weight;
                total += w.weight;
            }
            Ok((sw, sw2, total))
        })
        .collect::<Result<_>>()?;
    let mut sw = vec![0.0; n_bins];
    let mut sw2 = vec![0.0; n_bins];
    let mut total = 0.0;
    for (a, b, c) in &blocks {
        for k in 0..n_bins {
            sw[k] += a[k];
            sw2[k] += b[k];
        }
        total += c;
    }
    let mass: Vec<f64> = sw.iter().map(|w| w / total).collect();
    let var: Vec<f64> = sw2.iter().map(|w2| w2 / (total * total)).collect();
    let half = n_bins / 2;
    Ok(SpinHistogram {
        t,
        centers: (0..n_bins).map(|k| -1.0 + (k as f64 + 0.5) * width).collect(),
        density: mass.iter().map(|m| m / width).collect(),
        std_errs: var.iter().map(|v| v.sqrt() / width).collect(),
        mass_lower: mass[..half].iter().sum(),
        mass_upper: mass[half..].iter().sum(),
        flatness_p: (
            flatness_p_value(&mass[..half], &var[..half]),
            flatness_p_value(&mass[half..], &var[half..]),
        ),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MreSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errs: Vec<f64>,
}

/// `MRE(t) = ⟨[|S_z(t)| − |S_z(0)|] sgn S_z(t)⟩₀` under the unweighted
/// initial measure with trace normalization, so that `⟨|S_z|⟩₀ = 1`.
pub fn estimate_mre(cfg: &EnsembleConfig) -> Result<MreSeries> {
    if cfg.method != Method::Mash {
        return Err(Error::UnsupportedMethod(cfg.method));
    }
    cfg.validate()?;
    let prop = Propagator::new(cfg.model, cfg.bath, cfg.integrator)?;
    let steps = cfg.sample_steps();
    let n_t = steps.len();
    let blocks: Vec<Vec<f64>> = cfg
        .blocks()
        .into_par_iter()
        .map(|(lo, hi)| {
            // Layout: count, then one sum per time.
            let mut row = vec![0.0; 1 + n_t];
            for index in lo..hi {
                let mut w = Walker::start(cfg, &prop, index)?;
                for (j, &k) in steps.iter().enumerate() {
                    w.advance_to(&prop, ForceRule::MashWindowed, k);
                    let (_, s_z) = w.radius_and_s_z();
                    row[1 + j] += (s_z.abs() - w.s_z0.abs()) * sign(s_z);
                }
                row[0] += 1.0;
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(n_t);
    let mut std_errs = Vec::with_capacity(n_t);
    for j in 0..n_t {
        let data: Vec<Vec<f64>> = blocks.iter().map(|b| vec![b[0], b[1 + j]]).collect();
        let (v, e) = jackknife(&data, |tot| ELECTRONIC_TRACE * tot[1] / tot[0]);
        values.push(v);
        std_errs.push(e);
    }
    Ok(MreSeries {
        times: cfg.sample_times.clone(),
        values,
        std_errs,
    })
}
