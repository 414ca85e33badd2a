use rand::Rng;

/// Gate order inside the stacked `4H` weight rows.
const INPUT: usize = 0;
const FORGET: usize = 1;
const CELL: usize = 2;
const OUTPUT: usize = 3;

/// One LSTM layer. The four gates are stacked row-wise as input, forget,
/// cell candidate, output; `w` is `4H x I`, `u` is `4H x H`, both
/// row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmLayer {
    pub input_size: usize,
    pub hidden_size: usize,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrads {
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub b: Vec<f64>,
}

impl LayerGrads {
    pub fn zeros(layer: &LstmLayer) -> Self {
        LayerGrads {
            w: vec![0.0; layer.w.len()],
            u: vec![0.0; layer.u.len()],
            b: vec![0.0; layer.b.len()],
        }
    }

    pub(crate) fn add_assign(&mut self, other: &LayerGrads) {
        for (a, b) in self
            .w
            .iter_mut()
            .chain(&mut self.u)
            .chain(&mut self.b)
            .zip(other.w.iter().chain(&other.u).chain(&other.b))
        {
            *a += b;
        }
    }
}

/// Activations of one layer over a window, kept for backpropagation.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerCache {
    pub steps: usize,
    pub x: Vec<f64>,
    /// Post-activation gates, `steps x 4H`.
    pub gates: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    /// Hidden outputs, `steps x H`.
    pub h: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Four independent accumulators so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl LstmLayer {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        LstmLayer {
            input_size,
            hidden_size,
            w: vec![0.0; 4 * hidden_size * input_size],
            u: vec![0.0; 4 * hidden_size * hidden_size],
            b: vec![0.0; 4 * hidden_size],
        }
    }

    /// Glorot-uniform weights, zero biases except the forget gate at 1.0.
    pub fn init<R: Rng>(input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        let mut layer = Self::zeros(input_size, hidden_size);
        let gates = 4 * hidden_size;
        let w_limit = (6.0 / (input_size + gates) as f64).sqrt();
        let u_limit = (6.0 / (hidden_size + gates) as f64).sqrt();
        layer.w.iter_mut().for_each(|v| *v = rng.gen_range(-w_limit..w_limit));
        layer.u.iter_mut().for_each(|v| *v = rng.gen_range(-u_limit..u_limit));
        let h = hidden_size;
        layer.b[FORGET * h..(FORGET + 1) * h].fill(1.0);
        layer
    }

    /// Runs the recurrence from zero hidden and cell state over `x`, a
    /// row-major `steps x input_size` matrix.
    pub fn forward(&self, x: &[f64]) -> LayerCache {
        let (n_in, h) = (self.input_size, self.hidden_size);
        let steps = x.len() / n_in;
        let mut cache = LayerCache {
            steps,
            x: x.to_vec(),
            gates: vec![0.0; steps * 4 * h],
            c: vec![0.0; steps * h],
            tanh_c: vec![0.0; steps * h],
            h: vec![0.0; steps * h],
        };
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        for t in 0..steps {
            let xt = &x[t * n_in..(t + 1) * n_in];
            let gates = &mut cache.gates[t * 4 * h..(t + 1) * 4 * h];
            for (r, z) in gates.iter_mut().enumerate() {
                let mut pre = self.b[r] + dot(&self.w[r * n_in..(r + 1) * n_in], xt);
                if t > 0 {
                    pre += dot(&self.u[r * h..(r + 1) * h], &h_prev);
                }
                *z = if r / h == CELL { pre.tanh() } else { sigmoid(pre) };
            }
            for k in 0..h {
                let i = gates[INPUT * h + k];
                let f = gates[FORGET * h + k];
                let g = gates[CELL * h + k];
                let o = gates[OUTPUT * h + k];
                let c = f * c_prev[k] + i * g;
                let tc = c.tanh();
                cache.c[t * h + k] = c;
                cache.tanh_c[t * h + k] = tc;
                cache.h[t * h + k] = o * tc;
            }
            h_prev.copy_from_slice(&cache.h[t * h..(t + 1) * h]);
            c_prev.copy_from_slice(&cache.c[t * h..(t + 1) * h]);
        }
        cache
    }

    /// Backpropagation through time. `dh_out` is the loss gradient on every
    /// hidden output (`steps x H`); parameter gradients are accumulated into
    /// `grads` and the gradient on the inputs is returned.
    pub fn backward(&self, cache: &LayerCache, dh_out: &[f64], grads: &mut LayerGrads) -> Vec<f64> {
        let (n_in, h) = (self.input_size, self.hidden_size);
        let steps = cache.steps;
        let mut dx = vec![0.0; steps * n_in];
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dz = vec![0.0; 4 * h];
        for t in (0..steps).rev() {
            let gates = &cache.gates[t * 4 * h..(t + 1) * 4 * h];
            for k in 0..h {
                let i = gates[INPUT * h + k];
                let f = gates[FORGET * h + k];
                let g = gates[CELL * h + k];
                let o = gates[OUTPUT * h + k];
                let tc = cache.tanh_c[t * h + k];
                let c_prev = if t == 0 { 0.0 } else { cache.c[(t - 1) * h + k] };
                let dh = dh_out[t * h + k] + dh_next[k];
                let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
                dz[INPUT * h + k] = dc * g * i * (1.0 - i);
                dz[FORGET * h + k] = dc * c_prev * f * (1.0 - f);
                dz[CELL * h + k] = dc * i * (1.0 - g * g);
                dz[OUTPUT * h + k] = dh * tc * o * (1.0 - o);
                dc_next[k] = dc * f;
            }
            let xt = &cache.x[t * n_in..(t + 1) * n_in];
            let dxt = &mut dx[t * n_in..(t + 1) * n_in];
            dh_next.fill(0.0);
            for (r, &d) in dz.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                grads.b[r] += d;
                axpy(d, xt, &mut grads.w[r * n_in..(r + 1) * n_in]);
                axpy(d, &self.w[r * n_in..(r + 1) * n_in], dxt);
                if t > 0 {
                    let h_prev = &cache.h[(t - 1) * h..t * h];
                    axpy(d, h_prev, &mut grads.u[r * h..(r + 1) * h]);
                    axpy(d, &self.u[r * h..(r + 1) * h], &mut dh_next);
                }
            }
        }
        dx
    }
}
