//! The explicit scheme 𝕄(Uⁿ⁺¹ − 2Uⁿ + Uⁿ⁻¹) + Δt²(𝕂+𝔻)Uⁿ = 0.

use serde::Serialize;

use super::solver::{default_max_iter, pcg_solve, Preconditioner};
use super::EvolveError;
use crate::assembly::sparse::{dot, SparseSymMatrix};
use crate::assembly::DofMap;
use crate::mesh::TetMesh;
use nalgebra::Vector3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WaveState {
    pub u: Vec<f64>,
    pub u_prev: Vec<f64>,
    pub step: usize,
    pub dt: f64,
}

impl WaveState {
    /// Uⁿ = u, Uⁿ⁻¹ = u_prev at step 0.
    pub fn new(u: Vec<f64>, u_prev: Vec<f64>, dt: f64) -> Result<Self, EvolveError> {
        if !(dt > 0.0) {
            return Err(EvolveError::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        if u.len() != u_prev.len() {
            return Err(EvolveError::DimensionMismatch {
                expected: u.len(),
                found: u_prev.len(),
            });
        }
        Ok(WaveState { u, u_prev, step: 0, dt })
    }

    /// U⁻¹ = U⁰ − Δt·V⁰ + (Δt²/2)·𝕄⁻¹(−(𝕂+𝔻)U⁰).
    pub fn taylor_start(
        u0: Vec<f64>,
        v0: Option<&[f64]>,
        dt: f64,
        mass: &SparseSymMatrix,
        wave: &SparseSymMatrix,
        pre: &Preconditioner,
        tol: f64,
    ) -> Result<Self, EvolveError> {
        let n = mass.n;
        if u0.len() != n {
            return Err(EvolveError::DimensionMismatch { expected: n, found: u0.len() });
        }
        let au = wave.mul_vec(&u0);
        let mut acc = vec![0.0; n];
        pcg_solve(mass, &au, pre, &mut acc, tol, default_max_iter(n))?;
        let mut prev: Vec<f64> = u0.iter().zip(&acc).map(|(u, a)| u - 0.5 * dt * dt * a).collect();
        if let Some(v) = v0 {
            if v.len() != n {
                return Err(EvolveError::DimensionMismatch { expected: n, found: v.len() });
            }
            for (p, vi) in prev.iter_mut().zip(v) {
                *p -= dt * vi;
            }
        }
        WaveState::new(u0, prev, dt)
    }

    /// Swaps the two time levels so that stepping runs backwards in time.
    pub fn reversed(&self) -> WaveState {
        WaveState {
            u: self.u_prev.clone(),
            u_prev: self.u.clone(),
            step: 0,
            dt: self.dt,
        }
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }
}

/// ⟨𝕄(Uⁿ−Uⁿ⁻¹)/Δt, (Uⁿ−Uⁿ⁻¹)/Δt⟩ + ⟨(𝕂+𝔻)Uⁿ⁻¹, Uⁿ⟩.
pub fn discrete_energy(state: &WaveState, mass: &SparseSymMatrix, wave: &SparseSymMatrix) -> f64 {
    let du: Vec<f64> = state.u.iter().zip(&state.u_prev).map(|(a, b)| (a - b) / state.dt).collect();
    mass.bilinear(&du, &du) + wave.bilinear(&state.u_prev, &state.u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Probe {
    pub vertex: usize,
    pub dof: usize,
}

/// Probe values recorded for steps N_i ≤ n ≤ N_f.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeSet {
    pub probes: Vec<Probe>,
    pub window: (usize, usize),
    pub steps: Vec<usize>,
    pub samples: Vec<Vec<f64>>,
}

/// Nearest mesh vertex to each point, with its DOF.
pub fn snap_probes(mesh: &TetMesh, dofs: &DofMap, points: &[Vector3<f64>]) -> Vec<Probe> {
    points
        .iter()
        .map(|x| {
            let vertex = (0..mesh.vertices.len())
                .min_by(|&a, &b| (mesh.vertices[a] - x).norm_squared().total_cmp(&(mesh.vertices[b] - x).norm_squared()))
                .expect("mesh has vertices");
            Probe {
                vertex,
                dof: dofs.node_to_dof[vertex],
            }
        })
        .collect()
}

impl ProbeSet {
    pub fn new(probes: Vec<Probe>, window: (usize, usize)) -> Self {
        let samples = vec![Vec::new(); probes.len()];
        ProbeSet {
            probes,
            window,
            steps: Vec::new(),
            samples,
        }
    }

    fn record(&mut self, step: usize, u: &[f64]) {
        if step < self.window.0 || step > self.window.1 {
            return;
        }
        self.steps.push(step);
        for (p, s) in self.probes.iter().zip(self.samples.iter_mut()) {
            s.push(u[p.dof]);
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LeapfrogOptions {
    pub steps: usize,
    /// 0 disables snapshots.
    pub snapshot_every: usize,
    pub pcg_tol: f64,
    /// Defaults to 10·√N when None.
    pub max_iter: Option<usize>,
    /// EnergyBlowup when |E| > guard·|E(Δt)|.
    pub energy_guard: f64,
}

impl Default for LeapfrogOptions {
    fn default() -> Self {
        LeapfrogOptions {
            steps: 0,
            snapshot_every: 0,
            pcg_tol: 1e-12,
            max_iter: None,
            energy_guard: 10.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunOutput {
    pub state: WaveState,
    /// E at the steps of `energy_steps`; the first entry is the initial state.
    pub energy: Vec<f64>,
    pub energy_steps: Vec<usize>,
    pub pcg_iterations_total: usize,
    pub pcg_iterations_max: usize,
    pub snapshot_steps: Vec<usize>,
}

impl RunOutput {
    /// |E(T) − E(Δt)| / |E(Δt)|, zero when E(Δt) = 0.
    pub fn energy_drift(&self) -> f64 {
        match (self.energy.get(1), self.energy.last()) {
            (Some(&e1), Some(&et)) if e1 != 0.0 => (et - e1).abs() / e1.abs(),
            _ => 0.0,
        }
    }

    pub fn max_energy_deviation(&self) -> f64 {
        let Some(&e1) = self.energy.get(1) else { return 0.0 };
        if e1 == 0.0 {
            return 0.0;
        }
        self.energy[1..].iter().map(|e| (e - e1).abs() / e1.abs()).fold(0.0, f64::max)
    }
}

/// Runs `options.steps` steps. `snapshot` receives (step, Uⁿ) every
/// `snapshot_every` steps, including step 0.
pub fn leapfrog_run(
    mut state: WaveState,
    mass: &SparseSymMatrix,
    wave: &SparseSymMatrix,
    pre: &Preconditioner,
    options: &LeapfrogOptions,
    probes: &mut ProbeSet,
    mut snapshot: impl FnMut(usize, &[f64]) -> Result<(), EvolveError>,
) -> Result<RunOutput, EvolveError> {
    let n = mass.n;
    if state.u.len() != n {
        return Err(EvolveError::DimensionMismatch { expected: n, found: state.u.len() });
    }
    let max_iter = options.max_iter.unwrap_or_else(|| default_max_iter(n));
    let dt2 = state.dt * state.dt;

    let mut energy = vec![discrete_energy(&state, mass, wave)];
    let mut energy_steps = vec![state.step];
    let mut snapshot_steps = Vec::new();
    probes.record(state.step, &state.u);
    if options.snapshot_every > 0 {
        snapshot(state.step, &state.u)?;
        snapshot_steps.push(state.step);
    }

    let mut au = wave.mul_vec(&state.u);
    let mut z = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut du = vec![0.0; n];
    let mut mdu = vec![0.0; n];
    let (mut total, mut worst) = (0, 0);
    let mut reference: Option<f64> = None;

    for _ in 0..options.steps {
        let out = pcg_solve(mass, &au, pre, &mut z, options.pcg_tol, max_iter)?;
        total += out.iterations;
        worst = worst.max(out.iterations);
        for i in 0..n {
            next[i] = 2.0 * state.u[i] - state.u_prev[i] - dt2 * z[i];
        }
        // E(n+1) = ⟨𝕄δ, δ⟩/Δt² + ⟨(𝕂+𝔻)Uⁿ, Uⁿ⁺¹⟩
        for i in 0..n {
            du[i] = next[i] - state.u[i];
        }
        mass.mul_vec_into(&du, &mut mdu);
        let e = dot(&mdu, &du) / dt2 + dot(&au, &next);

        std::mem::swap(&mut state.u_prev, &mut state.u);
        std::mem::swap(&mut state.u, &mut next);
        state.step += 1;
        wave.mul_vec_into(&state.u, &mut au);

        energy.push(e);
        energy_steps.push(state.step);
        let r = *reference.get_or_insert(e);
        if !e.is_finite() || (r != 0.0 && e.abs() > options.energy_guard * r.abs()) {
            return Err(EvolveError::EnergyBlowup {
                step: state.step,
                energy: e,
                reference: r,
            });
        }
        probes.record(state.step, &state.u);
        if options.snapshot_every > 0 && state.step.is_multiple_of(options.snapshot_every) {
            snapshot(state.step, &state.u)?;
            snapshot_steps.push(state.step);
        }
    }
    Ok(RunOutput {
        state,
        energy,
        energy_steps,
        pcg_iterations_total: total,
        pcg_iterations_max: worst,
        snapshot_steps,
    })
}
