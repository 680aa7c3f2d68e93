//! Full many-body Fock-space simulation for very small mode counts.
//!
//! Exponential in the number of modes; used once to certify the Wick
//! four-operator factorization against an independent route. Operators
//! are represented with Jordan-Wigner sign strings over the occupation
//! basis, the thermal lead state enters as a mixture over bath
//! occupation patterns.

use super::{DotState, FiniteBath};
use crate::model::DeviceConfig;
use crate::C64;
use nalgebra::{DMatrix, DVector};

const MAX_MODES: usize = 10;

pub struct FockSimulator {
    dim: usize,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<C64>,
    n2: DMatrix<C64>,
    rho0: DMatrix<C64>,
}

/// Annihilation operator of mode `p` over `n_modes` modes, with the
/// Jordan-Wigner sign counting occupied modes below `p`.
fn annihilator(p: usize, n_modes: usize) -> DMatrix<C64> {
    let dim = 1usize << n_modes;
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for basis in 0..dim {
        if basis & (1 << p) == 0 {
            continue;
        }
        let target = basis & !(1 << p);
        let below = (basis & ((1 << p) - 1)).count_ones();
        let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
        m[(target, basis)] = C64::new(sign, 0.0);
    }
    m
}

impl FockSimulator {
    pub fn new(config: &DeviceConfig, bath: &FiniteBath, state: DotState) -> Self {
        let n_modes = 2 + bath.modes().len();
        assert!(
            n_modes <= MAX_MODES,
            "Fock simulation limited to {MAX_MODES} modes, got {n_modes}"
        );
        let dim = 1usize << n_modes;

        let ops: Vec<DMatrix<C64>> = (0..n_modes).map(|p| annihilator(p, n_modes)).collect();
        let creators: Vec<DMatrix<C64>> = ops.iter().map(|a| a.adjoint()).collect();

        // single-particle Hamiltonian lifted to Fock space
        let eps = config.dots.matrix();
        let mut h = DMatrix::<C64>::zeros(dim, dim);
        let mut add = |coef: C64, p: usize, q: usize| {
            if coef.norm() > 0.0 {
                h += (&creators[p] * &ops[q]) * coef;
            }
        };
        for i in 0..2 {
            for j in 0..2 {
                add(eps[(i, j)], i, j);
            }
        }
        for (m, mode) in bath.modes().iter().enumerate() {
            let p = 2 + m;
            add(C64::new(mode.energy, 0.0), p, p);
            for i in 0..2 {
                add(C64::new(mode.coupling[i], 0.0), i, p);
                add(C64::new(mode.coupling[i], 0.0), p, i);
            }
        }
        let eig = h.symmetric_eigen();

        // initial density matrix: dot state times thermal bath mixture
        let vacuum = {
            let mut v = DVector::<C64>::zeros(dim);
            v[0] = C64::new(1.0, 0.0);
            v
        };
        let dot_create: DMatrix<C64> = match state {
            DotState::SecondOccupied => creators[1].clone(),
            DotState::SuperpositionPlus => {
                (&creators[1] + &creators[0]) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
            }
        };
        let nb = bath.modes().len();
        let mut rho0 = DMatrix::<C64>::zeros(dim, dim);
        for pattern in 0..(1usize << nb) {
            let mut prob = 1.0;
            for (k, mode) in bath.modes().iter().enumerate() {
                prob *= if pattern & (1 << k) != 0 { mode.occupation } else { 1.0 - mode.occupation };
            }
            if prob == 0.0 {
                continue;
            }
            let mut psi = vacuum.clone();
            for k in (0..nb).rev() {
                if pattern & (1 << k) != 0 {
                    psi = &creators[2 + k] * psi;
                }
            }
            psi = &dot_create * psi;
            rho0 += (&psi * psi.adjoint()) * C64::new(prob, 0.0);
        }

        let n2 = &creators[1] * &ops[1];
        FockSimulator { dim, eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors, n2, rho0 }
    }

    fn propagator(&self, t: f64) -> DMatrix<C64> {
        let phases =
            DMatrix::from_diagonal(&self.eigenvalues.map(|e| C64::new(0.0, -e * t).exp()));
        &self.eigenvectors * phases * self.eigenvectors.adjoint()
    }

    fn n2_heisenberg(&self, t: f64) -> DMatrix<C64> {
        let u = self.propagator(t);
        u.adjoint() * &self.n2 * u
    }

    pub fn two_time_n2(&self, t1: f64, t2: f64) -> C64 {
        let prod = &self.rho0 * self.n2_heisenberg(t2) * self.n2_heisenberg(t1);
        (0..self.dim).map(|i| prod[(i, i)]).sum()
    }

    pub fn occupation_n2(&self, t: f64) -> f64 {
        let prod = &self.rho0 * self.n2_heisenberg(t);
        (0..self.dim).map(|i| prod[(i, i)]).sum::<C64>().re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{default_dots, default_left_reservoir, default_right_reservoir, make_series_config};

    #[test]
    fn anticommutation_relations() {
        let n = 3;
        let dim = 1 << n;
        for p in 0..n {
            for q in 0..n {
                let ap = annihilator(p, n);
                let aq = annihilator(q, n);
                // {a_p, a_q} = 0
                let anti = &ap * &aq + &aq * &ap;
                assert!(anti.norm() < 1e-14);
                // {a_p, a_q†} = delta_pq
                let mixed = &ap * aq.adjoint() + aq.adjoint() * &ap;
                let expect = if p == q {
                    DMatrix::<C64>::identity(dim, dim)
                } else {
                    DMatrix::<C64>::zeros(dim, dim)
                };
                assert!((mixed - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn closed_limit_matches_analytic_correlator() {
        // no bath modes at all: the simulator must reproduce the
        // closed-system two-time correlator for the superposition state
        let cfg = make_series_config(
            0.0,
            0.0,
            default_dots(),
            default_left_reservoir(),
            default_right_reservoir(),
        )
        .unwrap();
        let bath = crate::oracle::build_bath(&cfg, 1, 1.0).unwrap();
        assert!(bath.modes().is_empty());
        let sim = FockSimulator::new(&cfg, &bath, DotState::SuperpositionPlus);
        for &(t1, t2) in &[(0.0, 0.0), (0.3, 1.1), (1.0, 2.5)] {
            let exact = crate::closed::closed_two_time_n2(&cfg.dots, t1, t2);
            assert!((sim.two_time_n2(t1, t2) - exact).norm() < 1e-11);
        }
        let sim01 = FockSimulator::new(&cfg, &bath, DotState::SecondOccupied);
        assert!((sim01.occupation_n2(0.0) - 1.0).abs() < 1e-12);
        // closed |01> occupation is |w22|^2
        let w = crate::closed::closed_propagator(&cfg.dots, 0.8);
        assert!((sim01.occupation_n2(0.8) - w[(1, 1)].norm_sqr()).abs() < 1e-11);
    }
}
