//! Single-layer LSTM with a per-timestep linear readout.
//!
//! Packed parameters: gate weights `W` (`4H x (I + H)`, row-major, gate
//! order input/forget/cell/output, columns `[x; h_prev]`), gate biases `b`
//! (`4H`), readout weights (`H`), readout bias (1).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LstmLayout {
    pub input: usize,
    pub hidden: usize,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Activations of one sequence kept for backpropagation.
struct Trace {
    /// `[x_t; h_{t-1}]` per step.
    xh: Vec<Vec<f64>>,
    /// Post-nonlinearity gates `[i, f, g, o]` per step.
    gates: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    tanh_c: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl LstmLayout {
    pub(crate) fn new(input: usize, hidden: usize) -> Self {
        Self { input, hidden }
    }

    fn cols(&self) -> usize {
        self.input + self.hidden
    }

    fn w_len(&self) -> usize {
        4 * self.hidden * self.cols()
    }

    fn b_off(&self) -> usize {
        self.w_len()
    }

    fn out_w_off(&self) -> usize {
        self.b_off() + 4 * self.hidden
    }

    pub(crate) fn output_bias_index(&self) -> usize {
        self.out_w_off() + self.hidden
    }

    pub(crate) fn param_count(&self) -> usize {
        self.output_bias_index() + 1
    }

    pub(crate) fn bias_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (self.b_off()..self.b_off() + 4 * self.hidden).collect();
        v.push(self.output_bias_index());
        v
    }

    /// Uniform `+-1/sqrt(fan_in)` weights, forget-gate bias 1, other biases 0.
    pub(crate) fn init(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut p = vec![0.0; self.param_count()];
        let r = 1.0 / (self.cols() as f64).sqrt();
        for v in &mut p[..self.w_len()] {
            *v = rng.random_range(-r..r);
        }
        let h = self.hidden;
        for v in &mut p[self.b_off() + h..self.b_off() + 2 * h] {
            *v = 1.0;
        }
        let r = 1.0 / (h as f64).sqrt();
        for v in &mut p[self.out_w_off()..self.out_w_off() + h] {
            *v = rng.random_range(-r..r);
        }
        p
    }

    fn run(&self, params: &[f64], inputs: &[Vec<f64>], keep: bool) -> (Vec<f64>, Option<Trace>) {
        let h_n = self.hidden;
        let cols = self.cols();
        let w = &params[..self.w_len()];
        let b = &params[self.b_off()..self.b_off() + 4 * h_n];
        let w_out = &params[self.out_w_off()..self.out_w_off() + h_n];
        let b_out = params[self.output_bias_index()];

        let mut h = vec![0.0; h_n];
        let mut c = vec![0.0; h_n];
        let mut xh = vec![0.0; cols];
        let mut z = vec![0.0; 4 * h_n];
        let mut ys = Vec::with_capacity(inputs.len());
        let mut trace = keep.then(|| Trace {
            xh: Vec::with_capacity(inputs.len()),
            gates: Vec::with_capacity(inputs.len()),
            c: Vec::with_capacity(inputs.len()),
            tanh_c: Vec::with_capacity(inputs.len()),
            h: Vec::with_capacity(inputs.len()),
            y: Vec::new(),
        });

        for x in inputs {
            xh[..self.input].copy_from_slice(x);
            xh[self.input..].copy_from_slice(&h);
            for (r, zr) in z.iter_mut().enumerate() {
                *zr = b[r] + dot(&w[r * cols..(r + 1) * cols], &xh);
            }
            for k in 0..h_n {
                z[k] = sigmoid(z[k]);
                z[h_n + k] = sigmoid(z[h_n + k]);
                z[2 * h_n + k] = z[2 * h_n + k].tanh();
                z[3 * h_n + k] = sigmoid(z[3 * h_n + k]);
            }
            let mut tc = vec![0.0; h_n];
            for k in 0..h_n {
                c[k] = z[h_n + k] * c[k] + z[k] * z[2 * h_n + k];
                tc[k] = c[k].tanh();
                h[k] = z[3 * h_n + k] * tc[k];
            }
            let y = b_out + dot(w_out, &h);
            ys.push(y);
            if let Some(t) = trace.as_mut() {
                t.xh.push(xh.clone());
                t.gates.push(z.clone());
                t.c.push(c.clone());
                t.tanh_c.push(tc);
                t.h.push(h.clone());
            }
        }
        if let Some(t) = trace.as_mut() {
            t.y = ys.clone();
        }
        (ys, trace)
    }

    pub(crate) fn forward(&self, params: &[f64], inputs: &[Vec<f64>]) -> Vec<f64> {
        self.run(params, inputs, false).0
    }

    /// Mean squared error over every timestep of every sequence, with its
    /// gradient by backpropagation through time accumulated into `grad`.
    pub(crate) fn loss_and_grad(
        &self,
        params: &[f64],
        inputs: &[&[Vec<f64>]],
        targets: &[&[f64]],
        grad: &mut [f64],
    ) -> f64 {
        let h_n = self.hidden;
        let cols = self.cols();
        let total: usize = targets.iter().map(|t| t.len()).sum();
        let scale = 1.0 / total as f64;
        let w = &params[..self.w_len()];
        let w_out = &params[self.out_w_off()..self.out_w_off() + h_n];
        let (b_off, out_w_off, out_b) = (self.b_off(), self.out_w_off(), self.output_bias_index());
        let mut loss = 0.0;

        let mut dz = vec![0.0; 4 * h_n];
        let mut dxh = vec![0.0; cols];
        for (seq, tgt) in inputs.iter().zip(targets) {
            let (_, trace) = self.run(params, seq, true);
            let tr = trace.expect("trace requested");
            let mut dh_next = vec![0.0; h_n];
            let mut dc_next = vec![0.0; h_n];
            for t in (0..seq.len()).rev() {
                let err = tr.y[t] - tgt[t];
                loss += err * err * scale;
                let dy = 2.0 * err * scale;
                grad[out_b] += dy;
                axpy(dy, &tr.h[t], &mut grad[out_w_off..out_w_off + h_n]);

                let gates = &tr.gates[t];
                let c_prev = if t > 0 { &tr.c[t - 1][..] } else { &[][..] };
                for k in 0..h_n {
                    let dh = dy * w_out[k] + dh_next[k];
                    let (i, f, g, o) = (
                        gates[k],
                        gates[h_n + k],
                        gates[2 * h_n + k],
                        gates[3 * h_n + k],
                    );
                    let tc = tr.tanh_c[t][k];
                    let dc = dh * o * (1.0 - tc * tc) + dc_next[k];
                    let cp = if t > 0 { c_prev[k] } else { 0.0 };
                    dz[k] = dc * g * i * (1.0 - i);
                    dz[h_n + k] = dc * cp * f * (1.0 - f);
                    dz[2 * h_n + k] = dc * i * (1.0 - g * g);
                    dz[3 * h_n + k] = dh * tc * o * (1.0 - o);
                    dc_next[k] = dc * f;
                }
                dxh.iter_mut().for_each(|v| *v = 0.0);
                let xh = &tr.xh[t];
                for (r, &d) in dz.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    grad[b_off + r] += d;
                    axpy(d, xh, &mut grad[r * cols..(r + 1) * cols]);
                    axpy(d, &w[r * cols..(r + 1) * cols], &mut dxh);
                }
                dh_next.copy_from_slice(&dxh[self.input..]);
            }
        }
        loss
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn parameter_count() {
        let l = LstmLayout::new(6, 32);
        assert_eq!(l.param_count(), 4 * 32 * 38 + 4 * 32 + 32 + 1);
    }

    #[test]
    fn zero_parameters_emit_output_bias() {
        let l = LstmLayout::new(6, 4);
        let mut p = vec![0.0; l.param_count()];
        p[l.output_bias_index()] = -0.75;
        let seq: Vec<Vec<f64>> = (0..10).map(|k| vec![k as f64 * 0.1; 6]).collect();
        assert!(l.forward(&p, &seq).iter().all(|&y| y == -0.75));
    }

    #[test]
    fn loss_matches_forward() {
        let l = LstmLayout::new(2, 3);
        let p = l.init(&mut ChaCha8Rng::seed_from_u64(9));
        let seq: Vec<Vec<f64>> = (0..5)
            .map(|k| vec![k as f64 * 0.2, 1.0 - k as f64 * 0.1])
            .collect();
        let y = l.forward(&p, &seq);
        let tgt: Vec<f64> = y.iter().map(|v| v + 0.5).collect();
        let mut g = vec![0.0; p.len()];
        let loss = l.loss_and_grad(&p, &[&seq], &[&tgt], &mut g);
        assert!((loss - 0.25).abs() < 1e-12);
    }
}
