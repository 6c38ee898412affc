//! Forward and reverse passes for the fixed policy architecture.

use super::{Architecture, PolicyError, StateInput};
use rand::Rng;

/// Policy network: architecture constants plus a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNetwork {
    arch: Architecture,
    params: Vec<f64>,
}

/// Intermediate activations kept for the reverse pass.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    conv_pre: Vec<f64>,
    concat: Vec<f64>,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
    output: Vec<f64>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    /// Pre-activation values, used by tests to keep finite-difference probes
    /// away from the ReLU kinks.
    pub fn preactivations(&self) -> impl Iterator<Item = f64> + '_ {
        self.conv_pre.iter().chain(self.hidden_pre.iter()).copied()
    }
}

impl PolicyNetwork {
    pub fn zeroed(arch: Architecture) -> Result<Self, PolicyError> {
        arch.validate()?;
        let params = vec![0.0; arch.param_len()];
        Ok(Self { arch, params })
    }

    /// Uniform initialization in `[-scale, scale]`, deterministic given the
    /// generator state.
    pub fn init_random<R: Rng>(
        arch: Architecture,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self, PolicyError> {
        arch.validate()?;
        let params = (0..arch.param_len()).map(|_| rng.gen_range(-scale..=scale)).collect();
        Ok(Self { arch, params })
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self, PolicyError> {
        arch.validate()?;
        if params.len() != arch.param_len() {
            return Err(PolicyError::ParamLength {
                expected: arch.param_len(),
                actual: params.len(),
            });
        }
        Ok(Self { arch, params })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Next weight vector for `state`: softmax output, so always a valid
    /// long-only allocation summing to one.
    pub fn forward(&self, state: &StateInput) -> Result<Vec<f64>, PolicyError> {
        let mut trace = Trace::default();
        self.forward_traced(state, &mut trace)?;
        Ok(trace.output)
    }

    /// Inference-time alias of [`PolicyNetwork::forward`].
    pub fn act(&self, state: &StateInput) -> Result<Vec<f64>, PolicyError> {
        self.forward(state)
    }

    /// Forward pass keeping activations for [`PolicyNetwork::backward`].
    pub fn forward_traced(&self, state: &StateInput, trace: &mut Trace) -> Result<(), PolicyError> {
        state.check(&self.arch)?;
        let arch = &self.arch;
        let n_total = arch.n_total();
        let p = &self.params;

        // Convolution block: filter spans all slots by `conv_width` days.
        trace.conv_pre.clear();
        if arch.uses_window() {
            let window = state.log_return_window.as_ref().expect("checked");
            let positions = arch.conv_positions();
            trace.conv_pre.reserve(arch.k_maps * positions);
            for m in 0..arch.k_maps {
                let w_base = m * n_total * arch.conv_width;
                let bias = p[arch.conv_w_len() + m];
                for pos in 0..positions {
                    let mut acc = bias;
                    for (slot, row) in window.iter().enumerate() {
                        let base = w_base + slot * arch.conv_width;
                        for d in 0..arch.conv_width {
                            acc += p[base + d] * row[pos + d];
                        }
                    }
                    trace.conv_pre.push(acc);
                }
            }
        }

        // Flatten: conv maps, forecasts, weights, volume, volatility.
        trace.concat.clear();
        trace.concat.extend(trace.conv_pre.iter().map(|v| v.max(0.0)));
        if arch.uses_forecasts() {
            for step in state.forecasts.as_ref().expect("checked") {
                trace.concat.extend_from_slice(step);
            }
        }
        trace.concat.extend_from_slice(&state.weights);
        trace.concat.extend_from_slice(&state.volume_features);
        trace.concat.extend_from_slice(&state.volatility_features);
        debug_assert_eq!(trace.concat.len(), arch.concat_len());

        // Hidden dense layer with ReLU.
        let hidden_len = arch.hidden_len();
        let concat_len = arch.concat_len();
        trace.hidden_pre.clear();
        trace.hidden_pre.resize(hidden_len, 0.0);
        let fc1_w = &p[arch.fc1_w_off()..arch.fc1_b_off()];
        let fc1_b = &p[arch.fc1_b_off()..arch.out_w_off()];
        for h in 0..hidden_len {
            let row = &fc1_w[h * concat_len..(h + 1) * concat_len];
            let mut acc = fc1_b[h];
            for (w, x) in row.iter().zip(&trace.concat) {
                acc += w * x;
            }
            trace.hidden_pre[h] = acc;
        }
        trace.hidden.clear();
        trace.hidden.extend(trace.hidden_pre.iter().map(|v| v.max(0.0)));

        // Softmax output layer.
        let out_w = &p[arch.out_w_off()..arch.out_b_off()];
        let out_b = &p[arch.out_b_off()..];
        let mut logits = vec![0.0; n_total];
        for (o, logit) in logits.iter_mut().enumerate() {
            let row = &out_w[o * hidden_len..(o + 1) * hidden_len];
            let mut acc = out_b[o];
            for (w, h) in row.iter().zip(&trace.hidden) {
                acc += w * h;
            }
            *logit = acc;
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        trace.output.clear();
        trace.output.extend(logits.iter().map(|l| {
            let e = (l - max).exp();
            total += e;
            e
        }));
        for y in &mut trace.output {
            *y /= total;
        }
        Ok(())
    }

    /// Accumulates `d(loss)/d(params)` into `grad` given the upstream
    /// gradient `d_output = d(loss)/d(action)` and the activations recorded
    /// by [`PolicyNetwork::forward_traced`] for `state`. State inputs are
    /// treated as constants.
    pub fn backward(
        &self,
        state: &StateInput,
        trace: &Trace,
        d_output: &[f64],
        grad: &mut [f64],
    ) {
        let arch = &self.arch;
        let n_total = arch.n_total();
        debug_assert_eq!(d_output.len(), n_total);
        debug_assert_eq!(grad.len(), arch.param_len());
        let p = &self.params;

        // Softmax: d_logit = y * (d_out - <y, d_out>).
        let dot: f64 = trace.output.iter().zip(d_output).map(|(y, d)| y * d).sum();
        let d_logits: Vec<f64> =
            trace.output.iter().zip(d_output).map(|(y, d)| y * (d - dot)).collect();

        // Output layer.
        let hidden_len = arch.hidden_len();
        let out_w = &p[arch.out_w_off()..arch.out_b_off()];
        let mut d_hidden = vec![0.0; hidden_len];
        for o in 0..n_total {
            let dl = d_logits[o];
            grad[arch.out_b_off() + o] += dl;
            let w_row = &out_w[o * hidden_len..(o + 1) * hidden_len];
            let g_row = &mut grad[arch.out_w_off() + o * hidden_len..][..hidden_len];
            for h in 0..hidden_len {
                g_row[h] += dl * trace.hidden[h];
                d_hidden[h] += dl * w_row[h];
            }
        }

        // Hidden layer ReLU + dense.
        let concat_len = arch.concat_len();
        let fc1_w = &p[arch.fc1_w_off()..arch.fc1_b_off()];
        let mut d_concat = vec![0.0; concat_len];
        for h in 0..hidden_len {
            if trace.hidden_pre[h] <= 0.0 {
                continue;
            }
            let dh = d_hidden[h];
            grad[arch.fc1_b_off() + h] += dh;
            let w_row = &fc1_w[h * concat_len..(h + 1) * concat_len];
            let g_row = &mut grad[arch.fc1_w_off() + h * concat_len..][..concat_len];
            for c in 0..concat_len {
                g_row[c] += dh * trace.concat[c];
                d_concat[c] += dh * w_row[c];
            }
        }

        // Convolution block.
        if arch.uses_window() {
            let window = state.log_return_window.as_ref().expect("checked");
            let positions = arch.conv_positions();
            for m in 0..arch.k_maps {
                let w_base = m * n_total * arch.conv_width;
                for pos in 0..positions {
                    let idx = m * positions + pos;
                    if trace.conv_pre[idx] <= 0.0 {
                        continue;
                    }
                    let d = d_concat[idx];
                    if d == 0.0 {
                        continue;
                    }
                    grad[arch.conv_w_len() + m] += d;
                    for (slot, row) in window.iter().enumerate() {
                        let base = w_base + slot * arch.conv_width;
                        for off in 0..arch.conv_width {
                            grad[base + off] += d * row[pos + off];
                        }
                    }
                }
            }
        }
    }
}
