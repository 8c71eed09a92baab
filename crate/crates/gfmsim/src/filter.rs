//! Discrete first-order blocks, trapezoidal (bilinear) discretization.
//!
//! The bilinear form keeps DC gains exact (1 for the low-pass, 0 for the
//! washout), which the steady-state droop arithmetic relies on.

/// First-order low-pass  y' = w_c (u - y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPass {
    cutoff: f64,
    y: f64,
    u_prev: f64,
}

impl LowPass {
    /// `cutoff` in rad/s.
    pub fn new(cutoff: f64) -> Self {
        Self {
            cutoff,
            y: 0.0,
            u_prev: 0.0,
        }
    }

    /// Force the block to a settled state at output `y0`.
    pub fn reset(&mut self, y0: f64) {
        self.y = y0;
        self.u_prev = y0;
    }

    pub fn output(&self) -> f64 {
        self.y
    }

    pub fn update(&mut self, u: f64, dt: f64) -> f64 {
        let a = 0.5 * self.cutoff * dt;
        self.y = ((1.0 - a) * self.y + a * (u + self.u_prev)) / (1.0 + a);
        self.u_prev = u;
        self.y
    }
}

/// Washout (high-pass)  y = u - z  with  z' = w_c (u - z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Washout {
    lpf: LowPass,
    y: f64,
}

impl Washout {
    pub fn new(cutoff: f64) -> Self {
        Self {
            lpf: LowPass::new(cutoff),
            y: 0.0,
        }
    }

    /// Settle on a constant input `u0`: the washed-out output is zero.
    pub fn reset(&mut self, u0: f64) {
        self.lpf.reset(u0);
        self.y = 0.0;
    }

    pub fn output(&self) -> f64 {
        self.y
    }

    pub fn update(&mut self, u: f64, dt: f64) -> f64 {
        self.y = u - self.lpf.update(u, dt);
        self.y
    }
}
