//! Genetic toggle switch in Lambda Phage: molecule counts of the CI and Cro
//! proteins evolve under production rates set by the occupancy of three
//! operator sites on the DNA, each free (0), bound by a CI dimer (1), or
//! bound by a Cro dimer (2).
//!
//! ```text
//! dN_CI  = [S_CI  f_CI  - N_CI  / tau_CI ] dt + g_CI  dW
//! dN_Cro = [S_Cro f_Cro - N_Cro / tau_Cro] dt + g_Cro dW
//! ```
//!
//! with `g = sqrt(S^2 f + N / tau)` per component. The production rates
//! `f_CI`, `f_Cro` are Boltzmann averages over the 27 operator states; the
//! binding energies are compiled in. The lysogenic state (CI dominant) is
//! near `(212, 4.5)` and the lytic state (Cro dominant) near
//! `(0.165, 203.01)`, separated by a saddle near `(115.06, 18.69)`.

use crate::error::{Error, Result};
use crate::math::{Mat2, Vec2};
use crate::model::{newton_refine_equilibrium, require_stable, AttractorSpec, Model};

/// Binding energy in kcal/mol for an operator state, keyed by its digits
/// `(OR3, OR2, OR1)`. One entry per state of `{0,1,2}^3`.
fn binding_energy(d: [u8; 3]) -> f64 {
    match d {
        [0, 0, 0] => 0.0,
        [0, 0, 1] => -12.5,
        [0, 1, 0] => -10.5,
        [1, 0, 0] => -9.5,
        [0, 1, 1] => -25.7,
        [1, 0, 1] => -22.0,
        [1, 1, 0] => -22.9,
        [1, 1, 1] => -35.4,
        [0, 0, 2] => -14.4,
        [0, 2, 0] => -13.1,
        [2, 0, 0] => -15.5,
        [0, 2, 1] => -25.6,
        [1, 2, 0] => -22.6,
        [1, 2, 1] => -35.1,
        [2, 0, 1] => -28.0,
        [2, 1, 0] => -26.0,
        [2, 1, 1] => -41.2,
        [0, 1, 2] => -24.9,
        [1, 0, 2] => -23.9,
        [1, 1, 2] => -37.3,
        [0, 2, 2] => -27.5,
        [2, 0, 2] => -29.9,
        [2, 2, 0] => -28.6,
        [2, 2, 2] => -43.0,
        [2, 2, 1] => -41.1,
        [2, 1, 2] => -40.4,
        [1, 2, 2] => -37.0,
        _ => unreachable!("digits are in {{0,1,2}}"),
    }
}

/// One operator state: site digits, bound-dimer counts, binding energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BindingState {
    /// Site occupancies, each 0 (free), 1 (CI dimer), or 2 (Cro dimer).
    pub digits: [u8; 3],
    /// Number of bound CI dimers (count of 1-digits).
    pub ci_bound: u32,
    /// Number of bound Cro dimers (count of 2-digits).
    pub cro_bound: u32,
    /// Binding energy G(s) in kcal/mol.
    pub energy: f64,
}

/// All 27 operator states in lexicographic digit order.
pub fn binding_table() -> [BindingState; 27] {
    let mut out = [BindingState { digits: [0; 3], ci_bound: 0, cro_bound: 0, energy: 0.0 }; 27];
    let mut k = 0;
    for d0 in 0..3u8 {
        for d1 in 0..3u8 {
            for d2 in 0..3u8 {
                let digits = [d0, d1, d2];
                out[k] = BindingState {
                    digits,
                    ci_bound: digits.iter().filter(|&&d| d == 1).count() as u32,
                    cro_bound: digits.iter().filter(|&&d| d == 2).count() as u32,
                    energy: binding_energy(digits),
                };
                k += 1;
            }
        }
    }
    out
}

/// Rate and thermodynamic constants of the toggle switch.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaPhageParams {
    /// Thermal energy RT, kcal/mol.
    pub rt: f64,
    /// CI production scale.
    pub s_ci: f64,
    /// Cro production scale.
    pub s_cro: f64,
    /// PRM transcription rate with CI bound at OR2.
    pub r_rm: f64,
    /// Basal PRM transcription rate.
    pub r_rm_u: f64,
    /// PR transcription rate.
    pub r_r: f64,
    /// CI degradation time.
    pub tau_ci: f64,
    /// Cro degradation time.
    pub tau_cro: f64,
    /// CI dimerization free energy, kcal/mol.
    pub dg_ci: f64,
    /// Cro dimerization free energy, kcal/mol.
    pub dg_cro: f64,
    /// Effective bacterial volume, liters.
    pub v_cell: f64,
    /// Avogadro number.
    pub n_a: f64,
}

impl Default for LambdaPhageParams {
    fn default() -> Self {
        Self {
            rt: 0.617,
            s_ci: 1.0,
            s_cro: 20.0,
            r_rm: 0.115,
            r_rm_u: 0.01045,
            r_r: 0.30,
            tau_ci: 2943.0,
            tau_cro: 5194.0,
            dg_ci: -11.1,
            dg_cro: -7.0,
            v_cell: 2e-15,
            n_a: 6.022140857e23,
        }
    }
}

/// Which diffusion matrix the model reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionKind {
    /// `sigma = diag(g_CI, g_Cro)`, the chemically derived noise.
    Diagonal,
    /// `sigma = I`, for comparison runs.
    Identity,
}

/// Default seed for the lysogenic (CI-dominant) equilibrium.
pub const LYSOGENIC_SEED: Vec2 = Vec2::new(212.0, 4.5);
/// Default seed for the lytic (Cro-dominant) equilibrium.
pub const LYTIC_SEED: Vec2 = Vec2::new(0.1654, 203.0115);
/// Default seed for the saddle between the two stable states.
pub const SADDLE_SEED: Vec2 = Vec2::new(115.0625, 18.6875);

#[derive(Debug, Clone)]
pub struct LambdaPhageModel {
    params: LambdaPhageParams,
    kind: DiffusionKind,
    attractor: AttractorSpec,
    // Per state: (ci_bound, cro_bound, e^{-G/RT}), precomputed at
    // construction.
    states: [(i32, i32, f64); 27],
    // Dimerization constants q = e^{dG/RT} / 8.
    q_ci: f64,
    q_cro: f64,
    // Boltzmann sums grouped by bound-dimer counts (i, j): coefficients of
    // the bivariate cubics Z, S_CI numerator, S_Cro numerator in
    // ci^i cro^j. Entry [i][j] is the sum of the per-state weights (times
    // the transcription rate for the numerators) over states with those
    // counts.
    z_coef: [[f64; 4]; 4],
    fci_coef: [[f64; 4]; 4],
    fcro_coef: [[f64; 4]; 4],
}

impl LambdaPhageModel {
    /// Model with default parameters; the attractor is the lysogenic state,
    /// Newton-refined from its seed.
    pub fn new(kind: DiffusionKind) -> Result<Self> {
        Self::with_params(LambdaPhageParams::default(), kind)
    }

    pub fn with_params(params: LambdaPhageParams, kind: DiffusionKind) -> Result<Self> {
        let table = binding_table();
        let mut states = [(0, 0, 0.0); 27];
        let mut prm_active = [false; 27];
        let mut prm_basal = [false; 27];
        let mut pr_active = [false; 27];
        for (k, s) in table.iter().enumerate() {
            states[k] = (s.ci_bound as i32, s.cro_bound as i32, (-s.energy / params.rt).exp());
            // PRM makes CI when OR3 is free: stimulated with CI at OR2,
            // basal otherwise. PR makes Cro when OR1 and OR2 are both free.
            if s.digits[0] == 0 {
                if s.digits[1] == 1 {
                    prm_active[k] = true;
                } else {
                    prm_basal[k] = true;
                }
            }
            if s.digits[1] == 0 && s.digits[2] == 0 {
                pr_active[k] = true;
            }
        }
        let q_ci = (params.dg_ci / params.rt).exp() / 8.0;
        let q_cro = (params.dg_cro / params.rt).exp() / 8.0;
        let mut z_coef = [[0.0; 4]; 4];
        let mut fci_coef = [[0.0; 4]; 4];
        let mut fcro_coef = [[0.0; 4]; 4];
        for k in 0..27 {
            let (i, j, w) = states[k];
            let (i, j) = (i as usize, j as usize);
            z_coef[i][j] += w;
            if prm_active[k] {
                fci_coef[i][j] += params.r_rm * w;
            } else if prm_basal[k] {
                fci_coef[i][j] += params.r_rm_u * w;
            }
            if pr_active[k] {
                fcro_coef[i][j] += params.r_r * w;
            }
        }
        let mut model = Self {
            params,
            kind,
            attractor: AttractorSpec::StablePoint(LYSOGENIC_SEED),
            states,
            q_ci,
            q_cro,
            z_coef,
            fci_coef,
            fcro_coef,
        };
        let x0 = newton_refine_equilibrium(&model, LYSOGENIC_SEED, 1e-10, 200)?;
        require_stable(&model, x0)?;
        model.attractor = AttractorSpec::StablePoint(x0);
        Ok(model)
    }

    pub fn params(&self) -> &LambdaPhageParams {
        &self.params
    }

    pub fn diffusion_kind(&self) -> DiffusionKind {
        self.kind
    }

    /// Newton-refine an equilibrium (stable or saddle) from a seed.
    pub fn refine_equilibrium(&self, seed: Vec2) -> Result<Vec2> {
        newton_refine_equilibrium(self, seed, 1e-10, 200)
    }

    #[inline]
    fn dimer(n_molar: f64, q: f64) -> f64 {
        // Nonnegative by construction; clamp the tiny negative values
        // floating-point cancellation can produce near n = 0.
        (0.5 * n_molar + q - (n_molar * q + q * q).sqrt()).max(0.0)
    }

    fn dimers_unchecked(&self, n_ci: f64, n_cro: f64) -> (f64, f64) {
        let scale = 1.0 / (self.params.v_cell * self.params.n_a);
        (
            Self::dimer(n_ci * scale, self.q_ci),
            Self::dimer(n_cro * scale, self.q_cro),
        )
    }

    /// Molar CI and Cro dimer concentrations from molecule counts.
    pub fn dimers(&self, n_ci: f64, n_cro: f64) -> Result<(f64, f64)> {
        if n_ci < 0.0 || n_cro < 0.0 {
            return Err(Error::ModelDomain {
                at: Vec2::new(n_ci, n_cro),
                reason: "molecule counts must be nonnegative".into(),
            });
        }
        Ok(self.dimers_unchecked(n_ci, n_cro))
    }

    /// Boltzmann probabilities of the 27 operator states, in the order of
    /// [`binding_table`], from molar dimer concentrations.
    pub fn state_probabilities(&self, ci: f64, cro: f64) -> [f64; 27] {
        let mut p = [0.0; 27];
        let mut z = 0.0;
        for (k, &(i, j, w)) in self.states.iter().enumerate() {
            let ws = ci.powi(i) * cro.powi(j) * w;
            p[k] = ws;
            z += ws;
        }
        for ps in &mut p {
            *ps /= z;
        }
        p
    }

    /// Production rates `(f_CI, f_Cro)` at molecule counts `(n_ci, n_cro)`.
    /// Counts are clamped at zero so that root-finding iterates slightly
    /// outside the first quadrant stay evaluable.
    pub fn production_rates(&self, n_ci: f64, n_cro: f64) -> (f64, f64) {
        let (ci, cro) = self.dimers_unchecked(n_ci.max(0.0), n_cro.max(0.0));
        let pc = [1.0, ci, ci * ci, ci * ci * ci];
        let pr = [1.0, cro, cro * cro, cro * cro * cro];
        let mut z = 0.0;
        let mut num_ci = 0.0;
        let mut num_cro = 0.0;
        for i in 0..4 {
            for j in 0..4 - i {
                let m = pc[i] * pr[j];
                z += self.z_coef[i][j] * m;
                num_ci += self.fci_coef[i][j] * m;
                num_cro += self.fcro_coef[i][j] * m;
            }
        }
        (num_ci / z, num_cro / z)
    }

    fn fields(&self, x: Vec2) -> (Vec2, Mat2) {
        let (f_ci, f_cro) = self.production_rates(x.x, x.y);
        let p = &self.params;
        let decay_ci = x.x / p.tau_ci;
        let decay_cro = x.y / p.tau_cro;
        let b = Vec2::new(p.s_ci * f_ci - decay_ci, p.s_cro * f_cro - decay_cro);
        let sigma = match self.kind {
            DiffusionKind::Diagonal => Mat2::new(
                (p.s_ci * p.s_ci * f_ci + decay_ci).sqrt(),
                0.0,
                0.0,
                (p.s_cro * p.s_cro * f_cro + decay_cro).sqrt(),
            ),
            DiffusionKind::Identity => Mat2::identity(),
        };
        (b, sigma)
    }
}

impl Model for LambdaPhageModel {
    fn drift(&self, x: Vec2) -> Vec2 {
        let (f_ci, f_cro) = self.production_rates(x.x, x.y);
        let p = &self.params;
        Vec2::new(p.s_ci * f_ci - x.x / p.tau_ci, p.s_cro * f_cro - x.y / p.tau_cro)
    }

    fn sigma(&self, x: Vec2) -> Mat2 {
        self.fields(x).1
    }

    fn drift_sigma(&self, x: Vec2) -> (Vec2, Mat2) {
        self.fields(x)
    }

    fn attractor(&self) -> &AttractorSpec {
        &self.attractor
    }

    fn name(&self) -> &str {
        "lambda-phage"
    }
}
