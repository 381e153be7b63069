use super::EntropyNet;

/// Adam with L2 weight decay added to the gradient before the moment updates.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: EntropyNet,
    v: EntropyNet,
    step: i32,
}

impl Adam {
    pub fn new(net: &EntropyNet, learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            learning_rate,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: net.zeros_like(),
            v: net.zeros_like(),
            step: 0,
        }
    }

    pub fn step(&mut self, net: &mut EntropyNet, grads: &EntropyNet) {
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.step);
        let c2 = 1.0 - b2.powi(self.step);
        let lr = self.learning_rate;
        let wd = self.weight_decay;
        let eps = self.eps;
        let tensors = net
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut().into_iter().zip(self.v.tensors_mut()));
        for ((theta, g), (m, v)) in tensors {
            for i in 0..theta.len() {
                let gi = g[i] + wd * theta[i];
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                theta[i] -= lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}
