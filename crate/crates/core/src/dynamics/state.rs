use num_complex::Complex64;

/// Amplitudes of the ground and excited clock states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelState {
    pub c_g: Complex64,
    pub c_e: Complex64,
}

impl TwoLevelState {
    pub const fn ground() -> Self {
        Self {
            c_g: Complex64::new(1.0, 0.0),
            c_e: Complex64::new(0.0, 0.0),
        }
    }

    pub const fn excited() -> Self {
        Self {
            c_g: Complex64::new(0.0, 0.0),
            c_e: Complex64::new(1.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_g.norm_sqr() + self.c_e.norm_sqr()
    }

    pub fn excited_probability(&self) -> f64 {
        self.c_e.norm_sqr()
    }

    pub fn ground_probability(&self) -> f64 {
        self.c_g.norm_sqr()
    }
}

/// Free precession for `duration` seconds at detuning `δ`: `c_e → c_e e^{iδt}`.
pub fn free_evolution(state: TwoLevelState, duration: f64, detuning: f64) -> TwoLevelState {
    TwoLevelState {
        c_g: state.c_g,
        c_e: state.c_e * Complex64::from_polar(1.0, detuning * duration),
    }
}

/// 2×2 evolution operator, `U_ab = ⟨a|U|b⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    pub gg: Complex64,
    pub ge: Complex64,
    pub eg: Complex64,
    pub ee: Complex64,
}

impl Unitary2 {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            gg: one,
            ge: zero,
            eg: zero,
            ee: one,
        }
    }

    /// Build from the images of `|g⟩` and `|e⟩`.
    pub fn from_columns(from_g: TwoLevelState, from_e: TwoLevelState) -> Self {
        Self {
            gg: from_g.c_g,
            eg: from_g.c_e,
            ge: from_e.c_g,
            ee: from_e.c_e,
        }
    }

    pub fn apply(&self, s: TwoLevelState) -> TwoLevelState {
        TwoLevelState {
            c_g: self.gg * s.c_g + self.ge * s.c_e,
            c_e: self.eg * s.c_g + self.ee * s.c_e,
        }
    }

    /// `self · rhs`.
    pub fn mul(&self, rhs: &Unitary2) -> Unitary2 {
        Unitary2 {
            gg: self.gg * rhs.gg + self.ge * rhs.eg,
            ge: self.gg * rhs.ge + self.ge * rhs.ee,
            eg: self.eg * rhs.gg + self.ee * rhs.eg,
            ee: self.eg * rhs.ge + self.ee * rhs.ee,
        }
    }

    /// Resonant square pulse of area `θ` and phase `Φ`.
    pub fn square_pulse(area: f64, phase: f64) -> Self {
        let (s, c) = (0.5 * area).sin_cos();
        let mi = Complex64::new(0.0, -1.0);
        Self {
            gg: Complex64::new(c, 0.0),
            ge: mi * s * Complex64::from_polar(1.0, -phase),
            eg: mi * s * Complex64::from_polar(1.0, phase),
            ee: Complex64::new(c, 0.0),
        }
    }

    pub fn free(duration: f64, detuning: f64) -> Self {
        let mut u = Self::identity();
        u.ee = Complex64::from_polar(1.0, detuning * duration);
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn free_evolution_is_phase_only() {
        let s = TwoLevelState {
            c_g: Complex64::new(0.6, 0.0),
            c_e: Complex64::new(0.0, 0.8),
        };
        assert_eq!(free_evolution(s, 0.3, 0.0), s);
        let t = free_evolution(s, 1.0, 2.0 * PI);
        assert!((t.c_e - s.c_e).norm() < 1e-15);
        assert!((free_evolution(s, 0.7, 3.1).norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ideal_ramsey_fringe() {
        let p = Unitary2::square_pulse(PI / 2.0, 0.0);
        for k in 0..20 {
            let dt = k as f64 * 0.37;
            let u = p.mul(&Unitary2::free(1.0, dt)).mul(&p);
            let s = u.apply(TwoLevelState::ground());
            assert!((s.excited_probability() - 0.5 * (1.0 + dt.cos())).abs() < 1e-14);
            assert!((s.ground_probability() - 0.5 * (1.0 - dt.cos())).abs() < 1e-14);
        }
    }
}
