//! Fully connected tanh network with a linear scalar output.
//!
//! Parameters are packed layer by layer as `W` (row-major, `out x in`)
//! followed by `b`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct MlpLayout {
    /// Layer widths including input and the single output.
    pub sizes: Vec<usize>,
}

impl MlpLayout {
    pub(crate) fn new(input: usize, hidden: &[usize]) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Self { sizes }
    }

    pub(crate) fn param_count(&self) -> usize {
        self.sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    /// `(weight offset, bias offset, in, out)` for each layer.
    fn layers(&self) -> Vec<(usize, usize, usize, usize)> {
        let mut off = 0;
        self.sizes
            .windows(2)
            .map(|w| {
                let (inp, out) = (w[0], w[1]);
                let layer = (off, off + inp * out, inp, out);
                off += inp * out + out;
                layer
            })
            .collect()
    }

    pub(crate) fn bias_indices(&self) -> Vec<usize> {
        self.layers()
            .into_iter()
            .flat_map(|(_, b, _, out)| b..b + out)
            .collect()
    }

    pub(crate) fn output_bias_index(&self) -> usize {
        self.param_count() - 1
    }

    /// Uniform in `+-1/sqrt(fan_in)`, zero biases.
    pub(crate) fn init(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut p = vec![0.0; self.param_count()];
        for (w, _, inp, out) in self.layers() {
            let r = 1.0 / (inp as f64).sqrt();
            for v in &mut p[w..w + inp * out] {
                *v = rng.random_range(-r..r);
            }
        }
        p
    }

    pub(crate) fn forward(&self, params: &[f64], x: &[f64]) -> f64 {
        let mut cur = x.to_vec();
        let layers = self.layers();
        let last = layers.len() - 1;
        for (l, &(w, b, inp, out)) in layers.iter().enumerate() {
            let mut next = params[b..b + out].to_vec();
            for (o, slot) in next.iter_mut().enumerate() {
                let row = &params[w + o * inp..w + (o + 1) * inp];
                *slot += row.iter().zip(&cur).map(|(a, c)| a * c).sum::<f64>();
            }
            if l != last {
                next.iter_mut().for_each(|v| *v = v.tanh());
            }
            cur = next;
        }
        cur[0]
    }

    /// Mean squared error over the batch; accumulates its gradient into
    /// `grad` (which the caller zeroes).
    pub(crate) fn loss_and_grad(
        &self,
        params: &[f64],
        inputs: &[&[f64]],
        targets: &[f64],
        grad: &mut [f64],
    ) -> f64 {
        let layers = self.layers();
        let last = layers.len() - 1;
        let scale = 1.0 / inputs.len() as f64;
        let mut loss = 0.0;
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers.len() + 1);
        for (x, &y) in inputs.iter().zip(targets) {
            acts.clear();
            acts.push(x.to_vec());
            for (l, &(w, b, inp, out)) in layers.iter().enumerate() {
                let cur = &acts[l];
                let mut next = params[b..b + out].to_vec();
                for (o, slot) in next.iter_mut().enumerate() {
                    let row = &params[w + o * inp..w + (o + 1) * inp];
                    *slot += row.iter().zip(cur).map(|(a, c)| a * c).sum::<f64>();
                }
                if l != last {
                    next.iter_mut().for_each(|v| *v = v.tanh());
                }
                acts.push(next);
            }
            let err = acts[last + 1][0] - y;
            loss += err * err * scale;

            let mut delta = vec![2.0 * err * scale];
            for l in (0..=last).rev() {
                let (w, b, inp, out) = layers[l];
                let below = &acts[l];
                for o in 0..out {
                    grad[b + o] += delta[o];
                    let g = &mut grad[w + o * inp..w + (o + 1) * inp];
                    for (gi, a) in g.iter_mut().zip(below) {
                        *gi += delta[o] * a;
                    }
                }
                if l > 0 {
                    let mut prev = vec![0.0; inp];
                    for o in 0..out {
                        let row = &params[w + o * inp..w + (o + 1) * inp];
                        for (p, wv) in prev.iter_mut().zip(row) {
                            *p += delta[o] * wv;
                        }
                    }
                    // below holds tanh activations
                    for (p, a) in prev.iter_mut().zip(below) {
                        *p *= 1.0 - a * a;
                    }
                    delta = prev;
                }
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
    fn layout_counts() {
        let l = MlpLayout::new(4, &[64, 64]);
        assert_eq!(l.param_count(), 4 * 64 + 64 + 64 * 64 + 64 + 64 + 1);
        assert_eq!(l.bias_indices().len(), 64 + 64 + 1);
        assert_eq!(*l.bias_indices().last().unwrap(), l.output_bias_index());
    }

    #[test]
    fn zero_weights_output_the_bias() {
        let l = MlpLayout::new(4, &[3]);
        let mut p = vec![0.0; l.param_count()];
        p[l.output_bias_index()] = 2.5;
        assert_eq!(l.forward(&p, &[0.1, 0.2, 0.3, 0.4]), 2.5);
    }

    #[test]
    fn forward_agrees_with_loss_path() {
        let l = MlpLayout::new(4, &[5, 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = l.init(&mut rng);
        let x = [0.2, 0.4, 0.6, 0.8];
        let y = l.forward(&p, &x);
        let mut g = vec![0.0; p.len()];
        let loss = l.loss_and_grad(&p, &[&x], &[y + 1.0], &mut g);
        assert!((loss - 1.0).abs() < 1e-12);
    }
}
