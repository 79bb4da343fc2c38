use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::params::Params;
use super::OptimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    SgdDecay,
    Adam,
    Adagrad,
    Adadelta,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 4] = [Self::SgdDecay, Self::Adam, Self::Adagrad, Self::Adadelta];

    pub fn name(self) -> &'static str {
        match self {
            Self::SgdDecay => "sgd",
            Self::Adam => "adam",
            Self::Adagrad => "adagrad",
            Self::Adadelta => "adadelta",
        }
    }

    pub fn default_lr(self) -> f64 {
        match self {
            Self::SgdDecay => 1.0,
            Self::Adam => 0.0002,
            Self::Adagrad => 0.1,
            Self::Adadelta => 1.0,
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = OptimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sgd" | "sgd_decay" | "sgd-decay" => Ok(Self::SgdDecay),
            "adam" => Ok(Self::Adam),
            "adagrad" => Ok(Self::Adagrad),
            "adadelta" => Ok(Self::Adadelta),
            other => Err(OptimError::Config(format!("unknown optimizer '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub initial_lr: f64,
    pub decay_factor: f64,
    /// Decay fires after every epoch past this one.
    pub start_decay_epoch: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub adagrad_eps: f64,
    pub rho: f64,
    pub adadelta_eps: f64,
    /// Rescale gradients whose global L2 norm exceeds this.
    pub max_grad_norm: Option<f64>,
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind) -> Self {
        Self {
            kind,
            initial_lr: kind.default_lr(),
            decay_factor: 0.7,
            start_decay_epoch: 9,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            adagrad_eps: 1e-10,
            rho: 0.9,
            adadelta_eps: 1e-6,
            max_grad_norm: None,
        }
    }

    pub fn with_lr(mut self, lr: f64) -> Self {
        self.initial_lr = lr;
        self
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(OptimError::Config(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        if !(self.initial_lr >= 0.0 && self.initial_lr.is_finite()) {
            return Err(OptimError::Config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.initial_lr
            )));
        }
        unit("decay_factor", self.decay_factor)?;
        unit("beta1", self.beta1)?;
        unit("beta2", self.beta2)?;
        unit("rho", self.rho)?;
        for (name, eps) in [
            ("adam_eps", self.adam_eps),
            ("adagrad_eps", self.adagrad_eps),
            ("adadelta_eps", self.adadelta_eps),
        ] {
            if eps <= 0.0 {
                return Err(OptimError::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// A first-order update rule with its own state.
pub trait Optimizer: Send {
    fn kind(&self) -> OptimizerKind;

    /// Rate applied by the next `step`.
    fn lr(&self) -> f64;

    fn steps(&self) -> u64;

    fn step(&mut self, params: &mut Params, grads: &Params) -> Result<(), OptimError>;

    /// Epoch-boundary hook; returns the rate for the next epoch.
    fn end_of_epoch(&mut self, _epoch: usize, _val_ppl: f64) -> f64 {
        self.lr()
    }
}

fn prepare<'a>(
    config: &OptimizerConfig,
    params: &Params,
    grads: &'a Params,
    scratch: &'a mut Option<Params>,
) -> Result<&'a Params, OptimError> {
    params.check_gradient(grads)?;
    if let Some(max) = config.max_grad_norm {
        let norm = grads.l2_norm();
        if norm > max {
            let mut clipped = grads.clone();
            clipped.scale(max / norm);
            return Ok(scratch.insert(clipped));
        }
    }
    Ok(grads)
}

/// Plain SGD with the epoch-boundary decay rule.
pub struct SgdDecay {
    config: OptimizerConfig,
    lr: f64,
    previous_ppl: Option<f64>,
    steps: u64,
}

impl SgdDecay {
    pub fn new(config: OptimizerConfig) -> Self {
        Self {
            lr: config.initial_lr,
            config,
            previous_ppl: None,
            steps: 0,
        }
    }
}

impl Optimizer for SgdDecay {
    fn kind(&self) -> OptimizerKind {
        OptimizerKind::SgdDecay
    }

    fn lr(&self) -> f64 {
        self.lr
    }

    fn steps(&self) -> u64 {
        self.steps
    }

    fn step(&mut self, params: &mut Params, grads: &Params) -> Result<(), OptimError> {
        let mut scratch = None;
        let grads = prepare(&self.config, params, grads, &mut scratch)?;
        params.add_scaled(grads, -self.lr);
        self.steps += 1;
        Ok(())
    }

    /// Multiplies the rate by the decay factor, at most once, when the
    /// epoch is past the start epoch or perplexity failed to improve on the
    /// previous epoch.
    fn end_of_epoch(&mut self, epoch: usize, val_ppl: f64) -> f64 {
        let stalled = self.previous_ppl.is_some_and(|prev| !(val_ppl < prev));
        if epoch > self.config.start_decay_epoch || stalled {
            self.lr *= self.config.decay_factor;
        }
        self.previous_ppl = Some(val_ppl);
        self.lr
    }
}

pub struct Adam {
    config: OptimizerConfig,
    m: Option<Params>,
    v: Option<Params>,
    steps: u64,
}

impl Adam {
    pub fn new(config: OptimizerConfig) -> Self {
        Self {
            config,
            m: None,
            v: None,
            steps: 0,
        }
    }
}

impl Optimizer for Adam {
    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Adam
    }

    fn lr(&self) -> f64 {
        self.config.initial_lr
    }

    fn steps(&self) -> u64 {
        self.steps
    }

    fn step(&mut self, params: &mut Params, grads: &Params) -> Result<(), OptimError> {
        let mut scratch = None;
        let grads = prepare(&self.config, params, grads, &mut scratch)?;
        let c = &self.config;
        let m = self.m.get_or_insert_with(|| params.zeros_like());
        let v = self.v.get_or_insert_with(|| params.zeros_like());
        self.steps += 1;
        let t = self.steps as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        for (((p, g), m), v) in params
            .blocks
            .iter_mut()
            .zip(&grads.blocks)
            .zip(&mut m.blocks)
            .zip(&mut v.blocks)
        {
            for i in 0..p.values.len() {
                let gi = g.values[i];
                m.values[i] = c.beta1 * m.values[i] + (1.0 - c.beta1) * gi;
                v.values[i] = c.beta2 * v.values[i] + (1.0 - c.beta2) * gi * gi;
                let m_hat = m.values[i] / bc1;
                let v_hat = v.values[i] / bc2;
                p.values[i] -= c.initial_lr * m_hat / (v_hat.sqrt() + c.adam_eps);
            }
        }
        Ok(())
    }
}

/// Adagrad with the epsilon inside the square root.
pub struct Adagrad {
    config: OptimizerConfig,
    sum_sq: Option<Params>,
    steps: u64,
}

impl Adagrad {
    pub fn new(config: OptimizerConfig) -> Self {
        Self {
            config,
            sum_sq: None,
            steps: 0,
        }
    }
}

impl Optimizer for Adagrad {
    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Adagrad
    }

    fn lr(&self) -> f64 {
        self.config.initial_lr
    }

    fn steps(&self) -> u64 {
        self.steps
    }

    fn step(&mut self, params: &mut Params, grads: &Params) -> Result<(), OptimError> {
        let mut scratch = None;
        let grads = prepare(&self.config, params, grads, &mut scratch)?;
        let c = &self.config;
        let acc = self.sum_sq.get_or_insert_with(|| params.zeros_like());
        for ((p, g), a) in params.blocks.iter_mut().zip(&grads.blocks).zip(&mut acc.blocks) {
            for i in 0..p.values.len() {
                let gi = g.values[i];
                a.values[i] += gi * gi;
                p.values[i] -= c.initial_lr * gi / (a.values[i] + c.adagrad_eps).sqrt();
            }
        }
        self.steps += 1;
        Ok(())
    }
}

/// Adadelta; the computed update is additionally scaled by the rate.
pub struct Adadelta {
    config: OptimizerConfig,
    avg_sq_grad: Option<Params>,
    avg_sq_update: Option<Params>,
    steps: u64,
}

impl Adadelta {
    pub fn new(config: OptimizerConfig) -> Self {
        Self {
            config,
            avg_sq_grad: None,
            avg_sq_update: None,
            steps: 0,
        }
    }
}

impl Optimizer for Adadelta {
    fn kind(&self) -> OptimizerKind {
        OptimizerKind::Adadelta
    }

    fn lr(&self) -> f64 {
        self.config.initial_lr
    }

    fn steps(&self) -> u64 {
        self.steps
    }

    fn step(&mut self, params: &mut Params, grads: &Params) -> Result<(), OptimError> {
        let mut scratch = None;
        let grads = prepare(&self.config, params, grads, &mut scratch)?;
        let c = &self.config;
        let eg = self.avg_sq_grad.get_or_insert_with(|| params.zeros_like());
        let ex = self.avg_sq_update.get_or_insert_with(|| params.zeros_like());
        for (((p, g), eg), ex) in params
            .blocks
            .iter_mut()
            .zip(&grads.blocks)
            .zip(&mut eg.blocks)
            .zip(&mut ex.blocks)
        {
            for i in 0..p.values.len() {
                let gi = g.values[i];
                eg.values[i] = c.rho * eg.values[i] + (1.0 - c.rho) * gi * gi;
                let dx = -((ex.values[i] + c.adadelta_eps).sqrt() / (eg.values[i] + c.adadelta_eps).sqrt()) * gi;
                ex.values[i] = c.rho * ex.values[i] + (1.0 - c.rho) * dx * dx;
                p.values[i] += c.initial_lr * dx;
            }
        }
        self.steps += 1;
        Ok(())
    }
}

pub type OptimizerFactory = fn(OptimizerConfig) -> Box<dyn Optimizer>;

/// Name-keyed constructors for the update rules.
pub struct OptimizerRegistry {
    factories: BTreeMap<OptimizerKind, OptimizerFactory>,
}

impl Default for OptimizerRegistry {
    fn default() -> Self {
        let mut factories: BTreeMap<OptimizerKind, OptimizerFactory> = BTreeMap::new();
        factories.insert(OptimizerKind::SgdDecay, |c| Box::new(SgdDecay::new(c)));
        factories.insert(OptimizerKind::Adam, |c| Box::new(Adam::new(c)));
        factories.insert(OptimizerKind::Adagrad, |c| Box::new(Adagrad::new(c)));
        factories.insert(OptimizerKind::Adadelta, |c| Box::new(Adadelta::new(c)));
        Self { factories }
    }
}

impl OptimizerRegistry {
    pub fn register(&mut self, kind: OptimizerKind, factory: OptimizerFactory) {
        self.factories.insert(kind, factory);
    }

    pub fn build(&self, config: OptimizerConfig) -> Result<Box<dyn Optimizer>, OptimError> {
        config.validate()?;
        let factory = self
            .factories
            .get(&config.kind)
            .ok_or_else(|| OptimError::Config(format!("no optimizer registered for {}", config.kind)))?;
        Ok(factory(config))
    }

    pub fn build_named(&self, name: &str) -> Result<Box<dyn Optimizer>, OptimError> {
        self.build(OptimizerConfig::new(name.parse()?))
    }
}

pub fn build_optimizer(config: OptimizerConfig) -> Result<Box<dyn Optimizer>, OptimError> {
    OptimizerRegistry::default().build(config)
}
