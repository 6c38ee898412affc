//! Preference-aware policy-gradient allocator.
//!
//! The policy is a small feed-forward network mapping the observable state to
//! the next weight vector through a softmax output layer, so every action is
//! a valid long-only allocation by construction. Three interchangeable
//! variants differ in their market inputs: a convolutional window of
//! historical log-returns, explicit return forecasts, or both. All variants
//! additionally see the current weights and normalized volume/volatility
//! features so they can anticipate transaction costs.
//!
//! Training is episodic gradient ascent on the mean discounted reward, with
//! the reward differentiated directly through the softmax action (the reward
//! is a smooth function of the chosen weights, so no action sampling is
//! needed). Gradients are reverse-mode, hand-written for the fixed
//! architecture, and checked against finite differences in the test suite.

mod io;
mod net;
mod train;

pub use io::PolicyIoError;
pub use net::{PolicyNetwork, Trace};
pub use train::{
    discounted_returns, episode_gradient, episode_objective, immediate_reward, rollout_episode,
    train, CostInputs, EpisodeStep, FrozenEpisode, TrainConfig, TrainError,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("state does not match architecture: {0}")]
    StateMismatch(String),
    #[error("parameter vector has length {actual}, architecture needs {expected}")]
    ParamLength { expected: usize, actual: usize },
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
}

/// Which market inputs the policy network consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyVariant {
    /// Convolution over a window of historical log-returns.
    LogReturns,
    /// Explicit multi-step return forecasts.
    ForecastOnly,
    /// Both the log-return window and the forecasts.
    AllInputs,
}

impl PolicyVariant {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyVariant::LogReturns => "log-returns",
            PolicyVariant::ForecastOnly => "forecast-only",
            PolicyVariant::AllInputs => "all-inputs",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "log-returns" => Some(PolicyVariant::LogReturns),
            "forecast-only" => Some(PolicyVariant::ForecastOnly),
            "all-inputs" => Some(PolicyVariant::AllInputs),
            _ => None,
        }
    }

    pub(crate) fn tag(&self) -> u8 {
        match self {
            PolicyVariant::LogReturns => 0,
            PolicyVariant::ForecastOnly => 1,
            PolicyVariant::AllInputs => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(PolicyVariant::LogReturns),
            1 => Some(PolicyVariant::ForecastOnly),
            2 => Some(PolicyVariant::AllInputs),
            _ => None,
        }
    }
}

/// Network shape constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    pub variant: PolicyVariant,
    pub n_risky: usize,
    /// Log-return window length in trading days.
    pub lookback: usize,
    /// Convolution filter width in trading days.
    pub conv_width: usize,
    /// Number of convolution feature maps.
    pub k_maps: usize,
    /// Forecast steps consumed by forecast-aware variants.
    pub horizon: usize,
}

impl Architecture {
    /// Reference shape: one-month lookback, one-week filter, one feature map
    /// per slot, two-step forecasts.
    pub fn standard(variant: PolicyVariant, n_risky: usize) -> Self {
        Self { variant, n_risky, lookback: 20, conv_width: 5, k_maps: n_risky + 1, horizon: 2 }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.n_risky == 0 {
            return Err(PolicyError::InvalidArchitecture("need at least one risky asset".into()));
        }
        if self.uses_window() && (self.conv_width == 0 || self.lookback < self.conv_width) {
            return Err(PolicyError::InvalidArchitecture(format!(
                "lookback {} must cover the filter width {}",
                self.lookback, self.conv_width
            )));
        }
        if self.uses_window() && self.k_maps == 0 {
            return Err(PolicyError::InvalidArchitecture("need at least one feature map".into()));
        }
        if self.uses_forecasts() && self.horizon == 0 {
            return Err(PolicyError::InvalidArchitecture("forecast horizon must be >= 1".into()));
        }
        Ok(())
    }

    pub fn n_total(&self) -> usize {
        self.n_risky + 1
    }

    pub fn uses_window(&self) -> bool {
        matches!(self.variant, PolicyVariant::LogReturns | PolicyVariant::AllInputs)
    }

    pub fn uses_forecasts(&self) -> bool {
        matches!(self.variant, PolicyVariant::ForecastOnly | PolicyVariant::AllInputs)
    }

    /// Positions produced by sliding the filter over the window.
    pub fn conv_positions(&self) -> usize {
        self.lookback - self.conv_width + 1
    }

    /// Length of the flattened input to the first dense layer.
    pub fn concat_len(&self) -> usize {
        let mut len = 3 * self.n_risky + 1; // weights + volume + volatility
        if self.uses_window() {
            len += self.k_maps * self.conv_positions();
        }
        if self.uses_forecasts() {
            len += self.horizon * self.n_total();
        }
        len
    }

    /// Hidden dense layer width.
    pub fn hidden_len(&self) -> usize {
        3 * self.n_total()
    }

    // Flat parameter layout: [conv_w, conv_b] (window variants only),
    // [fc1_w, fc1_b, out_w, out_b].
    pub(crate) fn conv_w_len(&self) -> usize {
        if self.uses_window() {
            self.k_maps * self.n_total() * self.conv_width
        } else {
            0
        }
    }

    pub(crate) fn conv_b_len(&self) -> usize {
        if self.uses_window() {
            self.k_maps
        } else {
            0
        }
    }

    pub(crate) fn fc1_w_off(&self) -> usize {
        self.conv_w_len() + self.conv_b_len()
    }

    pub(crate) fn fc1_b_off(&self) -> usize {
        self.fc1_w_off() + self.hidden_len() * self.concat_len()
    }

    pub(crate) fn out_w_off(&self) -> usize {
        self.fc1_b_off() + self.hidden_len()
    }

    pub(crate) fn out_b_off(&self) -> usize {
        self.out_w_off() + self.n_total() * self.hidden_len()
    }

    /// Total flat parameter count.
    pub fn param_len(&self) -> usize {
        self.out_b_off() + self.n_total()
    }
}

/// Observable state consumed by [`PolicyNetwork::forward`].
#[derive(Debug, Clone)]
pub struct StateInput {
    /// `[slot][0..lookback]` log returns, oldest first; cash slot last.
    pub log_return_window: Option<Vec<Vec<f64>>>,
    /// `[step][slot]` forecast returns for the next `horizon` days.
    pub forecasts: Option<Vec<Vec<f64>>>,
    /// Current portfolio weights including cash.
    pub weights: Vec<f64>,
    /// Normalized trailing volume estimates, risky assets only.
    pub volume_features: Vec<f64>,
    /// Normalized trailing volatility estimates, risky assets only.
    pub volatility_features: Vec<f64>,
}

impl StateInput {
    pub(crate) fn check(&self, arch: &Architecture) -> Result<(), PolicyError> {
        let n_total = arch.n_total();
        if self.weights.len() != n_total {
            return Err(PolicyError::StateMismatch(format!(
                "weights length {} != {n_total}",
                self.weights.len()
            )));
        }
        if self.volume_features.len() != arch.n_risky
            || self.volatility_features.len() != arch.n_risky
        {
            return Err(PolicyError::StateMismatch("feature vector length".into()));
        }
        if arch.uses_window() {
            match &self.log_return_window {
                None => return Err(PolicyError::StateMismatch("missing log-return window".into())),
                Some(w) => {
                    if w.len() != n_total || w.iter().any(|row| row.len() != arch.lookback) {
                        return Err(PolicyError::StateMismatch(format!(
                            "window must be {n_total} x {}",
                            arch.lookback
                        )));
                    }
                }
            }
        }
        if arch.uses_forecasts() {
            match &self.forecasts {
                None => return Err(PolicyError::StateMismatch("missing forecasts".into())),
                Some(f) => {
                    if f.len() != arch.horizon || f.iter().any(|row| row.len() != n_total) {
                        return Err(PolicyError::StateMismatch(format!(
                            "forecasts must be {} x {n_total}",
                            arch.horizon
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
