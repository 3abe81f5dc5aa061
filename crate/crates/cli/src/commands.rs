use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use pds_core::assembly::{assemble, build_dof_map, estimate_spectral_bound, quadrature_rule, DofMap, Operators};
use pds_core::assembly::{SparseSymMatrix, SpectralBound};
use pds_core::domain::{build_domain, project, FundamentalDomain};
use pds_core::evolve::{
    check_time_step, initial_bump, initial_random, leapfrog_run, snap_probes, EvolveError, LeapfrogOptions,
    Preconditioner, Probe, ProbeSet, WaveState, SAFE_STEP_FRACTION,
};
use pds_core::icosian::{generate_group, orbit_vertices, GroupTable, TRANSLATION_DISTANCES};
use pds_core::mesh::io::{import_mesh, write_ele, write_node, write_vtk};
use pds_core::mesh::validate::{validate_mesh, MeshReport};
use pds_core::mesh::{generate_mesh, TetMesh};
use pds_core::spectra::{
    analyze_signals, check_window, detrend, dft_magnitude, stabilization_time, AnalysisOptions, PeakOptions,
};

use crate::config::{InitialData, RunConfig, TimeStep};

/// Exit status by pipeline stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Usage = 1,
    Mesh = 2,
    Evolution = 3,
    Analysis = 4,
}

#[derive(Debug)]
pub struct Failure {
    pub stage: Stage,
    pub error: anyhow::Error,
}

pub type Outcome<T> = std::result::Result<T, Failure>;

pub trait AtStage<T> {
    fn at(self, stage: Stage) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> AtStage<T> for std::result::Result<T, E> {
    fn at(self, stage: Stage) -> Outcome<T> {
        self.map_err(|e| Failure {
            stage,
            error: e.into(),
        })
    }
}

/// Global dump requests.
#[derive(Clone, Copy, Debug, Default)]
pub struct Dumps {
    pub group: bool,
    pub cell: bool,
    pub domain: bool,
}

pub const MESH_NODE: &str = "mesh.node";
pub const MESH_ELE: &str = "mesh.ele";
pub const MESH_VTK: &str = "mesh.vtk";
pub const MESH_REPORT: &str = "mesh_report.json";
pub const OPERATORS: &str = "operators.json";
pub const PROBES: &str = "probes.csv";
pub const ENERGY: &str = "energy.csv";
pub const MANIFEST: &str = "run_manifest.json";
pub const SPECTRUM: &str = "spectrum.csv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const VALIDATION: &str = "validation.json";
pub const SNAPSHOT_DIR: &str = "snapshots";

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_dumps(cfg: &RunConfig, dumps: Dumps) -> Outcome<()> {
    if dumps.group || dumps.cell {
        let group = generate_group().at(Stage::Mesh)?;
        if dumps.group {
            let elements: Vec<Value> = group
                .elements
                .iter()
                .map(|e| {
                    let exact: Vec<[i64; 3]> = e
                        .exact
                        .0
                        .iter()
                        .map(|c| {
                            let (a, b, d) = c.parts();
                            [a, b, d]
                        })
                        .collect();
                    json!({ "quaternion": e.quat.to_array(), "exact_a_b_c": exact, "chi": e.chi })
                })
                .collect();
            let v = json!({
                "order": group.len(),
                "note": "exact coefficients are (a + b*sqrt(5))/c",
                "translation_distances": TRANSLATION_DISTANCES,
                "elements": elements,
            });
            write_json(&cfg.out.join("group.json"), &v).at(Stage::Mesh)?;
        }
        if dumps.cell {
            let orbit = orbit_vertices(&group, &build_domain().vertices).at(Stage::Mesh)?;
            write_json(&cfg.out.join("cell.json"), &orbit).at(Stage::Mesh)?;
        }
    }
    if dumps.domain {
        write_json(&cfg.out.join("domain.json"), &build_domain()).at(Stage::Mesh)?;
    }
    Ok(())
}

/// Generated from (n, L) or imported from `.node`/`.ele`.
pub fn load_mesh(cfg: &RunConfig, domain: &FundamentalDomain) -> Outcome<TetMesh> {
    match &cfg.import {
        Some((node, ele)) => import_mesh(domain, node, ele, cfg.import_tol)
            .with_context(|| format!("importing {} / {}", node.display(), ele.display()))
            .at(Stage::Mesh),
        None => generate_mesh(domain, cfg.n, cfg.layers, cfg.grading).at(Stage::Mesh),
    }
}

/// SHA-256 of the mesh in `.node` + `.ele` form.
pub fn mesh_hash(mesh: &TetMesh) -> String {
    let mut buf = Vec::new();
    write_node(mesh, &mut buf).expect("in-memory write");
    write_ele(mesh, &mut buf).expect("in-memory write");
    hex::encode(Sha256::digest(&buf))
}

fn mesh_source(cfg: &RunConfig) -> Value {
    match &cfg.import {
        Some((node, ele)) => json!({ "import": [node, ele], "tolerance": cfg.import_tol }),
        None => json!({ "n": cfg.n, "layers": cfg.layers, "grading": cfg.grading }),
    }
}

pub fn cmd_mesh(cfg: &RunConfig) -> Outcome<()> {
    let domain = build_domain();
    let mesh = load_mesh(cfg, &domain)?;
    let write = || -> Result<MeshReport> {
        let mut w = create(&cfg.out.join(MESH_NODE))?;
        write_node(&mesh, &mut w)?;
        w.flush()?;
        let mut w = create(&cfg.out.join(MESH_ELE))?;
        write_ele(&mesh, &mut w)?;
        w.flush()?;
        let mut w = create(&cfg.out.join(MESH_VTK))?;
        write_vtk(&mesh, None, &mut w)?;
        w.flush()?;
        let report = validate_mesh(&domain, &mesh);
        let v = json!({ "source": mesh_source(cfg), "sha256": mesh_hash(&mesh), "report": report });
        write_json(&cfg.out.join(MESH_REPORT), &v)?;
        Ok(report)
    };
    let report = write().at(Stage::Mesh)?;
    println!(
        "mesh: {} vertices, {} tets, {} boundary triangles, {} periodic pairs",
        report.num_vertices, report.num_tets, report.num_boundary_tris, report.periodic_pairs
    );
    println!(
        "volume {:.10} (exact {:.10}, relative error {:.3e}); boundary edges {:.3e} .. {:.3e}",
        report.volume, report.exact_volume, report.relative_volume_error, report.min_boundary_edge, report.max_boundary_edge
    );
    for p in report.problems(problem_tol(cfg), cfg.edge_ratio_max) {
        log::warn!("{p}");
    }
    Ok(())
}

fn problem_tol(cfg: &RunConfig) -> f64 {
    if cfg.import.is_some() {
        cfg.import_tol
    } else {
        1e-9
    }
}

/// Mesh, DOF map, operators and stability bound.
pub struct Pipeline {
    pub domain: FundamentalDomain,
    pub mesh: TetMesh,
    pub hash: String,
    pub dofs: DofMap,
    pub ops: Operators,
    pub wave: SparseSymMatrix,
    pub bound: SpectralBound,
}

impl Pipeline {
    pub fn build(cfg: &RunConfig) -> Outcome<Pipeline> {
        let domain = build_domain();
        let mesh = load_mesh(cfg, &domain)?;
        let hash = mesh_hash(&mesh);
        let dofs = build_dof_map(&mesh).at(Stage::Mesh)?;
        let ops = assemble(&mesh, &dofs, &quadrature_rule(4).expect("degree 4 rule")).at(Stage::Mesh)?;
        let wave = ops.wave_operator();
        let bound = estimate_spectral_bound(&ops.mass, &wave, cfg.bound_tol).at(Stage::Evolution)?;
        log::info!(
            "{} DOFs, lambda_max {:.6e}, dt_max {:.6e} ({} power iterations)",
            dofs.num_dofs(),
            bound.lambda_max,
            bound.dt_max,
            bound.iterations
        );
        Ok(Pipeline {
            domain,
            mesh,
            hash,
            dofs,
            ops,
            wave,
            bound,
        })
    }
}

pub fn cmd_assemble(cfg: &RunConfig) -> Outcome<()> {
    let p = Pipeline::build(cfg)?;
    let write = || -> Result<()> {
        for (name, m) in [("mass", &p.ops.mass), ("stiffness", &p.ops.stiffness), ("drift", &p.ops.drift)] {
            let mut w = create(&cfg.out.join(format!("{name}.mtx")))?;
            m.write_matrix_market(&mut w)?;
            w.flush()?;
        }
        let v = json!({
            "mesh": mesh_source(cfg),
            "mesh_sha256": p.hash,
            "dofs": p.dofs.num_dofs(),
            "counts": p.dofs.counts,
            "counts_formula": p.dofs.counts.formula(),
            "nnz_lower": p.ops.mass.nnz_lower(),
            "spectral_bound": p.bound,
            "bound_tolerance": cfg.bound_tol,
        });
        write_json(&cfg.out.join(OPERATORS), &v)
    };
    write().at(Stage::Mesh)?;
    println!(
        "assembled {} DOFs ({} stored lower entries); lambda_max {:.6e}, dt_max {:.6e}",
        p.dofs.num_dofs(),
        p.ops.mass.nnz_lower(),
        p.bound.lambda_max,
        p.bound.dt_max
    );
    Ok(())
}

fn initial_state(cfg: &RunConfig, p: &Pipeline, group: &GroupTable, dt: f64, pre: &Preconditioner) -> Result<WaveState> {
    let u0 = match cfg.init {
        InitialData::Bump { x0, r0, amplitude } => initial_bump(
            &p.domain,
            group,
            &p.mesh,
            &p.dofs,
            &nalgebra::Vector3::new(x0[0], x0[1], x0[2]),
            r0,
            amplitude,
        )?,
        InitialData::Random { seed, amplitude } => initial_random(seed, amplitude, p.dofs.num_dofs()),
    };
    Ok(WaveState::taylor_start(u0, None, dt, &p.ops.mass, &p.wave, pre, cfg.pcg_tol)?)
}

fn write_signals(path: &Path, probes: &ProbeSet, dt: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["step".to_string(), "time".to_string()];
    header.extend((0..probes.probes.len()).map(|i| format!("probe_{i}")));
    w.write_record(&header)?;
    for (k, step) in probes.steps.iter().enumerate() {
        let mut row = vec![step.to_string(), format!("{:.17e}", *step as f64 * dt)];
        row.extend(probes.samples.iter().map(|s| format!("{:.17e}", s[k])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_energy(path: &Path, steps: &[usize], energy: &[f64], dt: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["step", "time", "energy"])?;
    for (s, e) in steps.iter().zip(energy) {
        w.write_record([s.to_string(), format!("{:.17e}", *s as f64 * dt), format!("{e:.17e}")])?;
    }
    w.flush()?;
    Ok(())
}

fn probe_json(p: &Pipeline, points: &[[f64; 3]], probes: &[Probe]) -> Vec<Value> {
    points
        .iter()
        .zip(probes)
        .map(|(x, pr)| {
            let v = p.mesh.vertices[pr.vertex];
            json!({ "point": x, "vertex": pr.vertex, "dof": pr.dof, "snapped": [v[0], v[1], v[2]] })
        })
        .collect()
}

pub fn cmd_run(cfg: &RunConfig) -> Outcome<()> {
    let p = Pipeline::build(cfg)?;
    let dt = match cfg.dt {
        TimeStep::Auto => SAFE_STEP_FRACTION * p.bound.dt_max,
        TimeStep::Fixed(dt) => {
            check_time_step(dt, p.bound.dt_max, cfg.force).at(Stage::Evolution)?;
            if dt > SAFE_STEP_FRACTION * p.bound.dt_max {
                log::warn!("forced time step {dt} exceeds 0.95 dt_max = {}", SAFE_STEP_FRACTION * p.bound.dt_max);
            }
            dt
        }
    };
    let window_start = cfg.window_start.unwrap_or((stabilization_time() / dt).ceil() as usize);
    let window_end = cfg.window_end.unwrap_or(cfg.steps);
    if window_start > window_end {
        log::warn!("recording window starts at step {window_start}, after the last step {window_end}; no probe samples");
    } else if let Err(e) = check_window(window_start, dt, cfg.force_window) {
        log::warn!("{e}");
    }
    for x in cfg.probe_points() {
        if !p.domain.contains(&x, 1e-9).unwrap_or(false) {
            log::warn!("probe point {:?} lies outside the fundamental domain; using the nearest mesh vertex", x.as_slice());
        }
    }
    let probes = snap_probes(&p.mesh, &p.dofs, &cfg.probe_points());
    let mut probe_set = ProbeSet::new(probes.clone(), (window_start, window_end));

    let group = generate_group().at(Stage::Mesh)?;
    let pre = Preconditioner::for_mass(&p.ops.mass);
    let state = initial_state(cfg, &p, &group, dt, &pre).at(Stage::Evolution)?;
    let options = LeapfrogOptions {
        steps: cfg.steps,
        snapshot_every: cfg.snapshot_every,
        pcg_tol: cfg.pcg_tol,
        max_iter: None,
        energy_guard: cfg.energy_guard,
    };
    let snap_dir = cfg.out.join(SNAPSHOT_DIR);
    let started = std::time::Instant::now();
    let output = leapfrog_run(state, &p.ops.mass, &p.wave, &pre, &options, &mut probe_set, |step, u| {
        let path = snap_dir.join(format!("u_{step:08}.vtk"));
        let write = || -> Result<()> {
            let mut w = create(&path)?;
            write_vtk(&p.mesh, Some(("u", &p.dofs.expand(u))), &mut w)?;
            w.flush()?;
            Ok(())
        };
        write().map_err(|e| EvolveError::Snapshot(format!("{}: {e:#}", path.display())))
    })
    .at(Stage::Evolution)?;
    let elapsed = started.elapsed().as_secs_f64();

    let e0 = output.energy[0];
    let e_end = *output.energy.last().expect("energy series is never empty");
    let write = || -> Result<()> {
        write_signals(&cfg.out.join(PROBES), &probe_set, dt)?;
        write_energy(&cfg.out.join(ENERGY), &output.energy_steps, &output.energy, dt)?;
        let created = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let manifest = json!({
            "created_unix": created,
            "mesh": mesh_source(cfg),
            "mesh_sha256": p.hash,
            "dofs": p.dofs.num_dofs(),
            "lambda_max": p.bound.lambda_max,
            "dt_max": p.bound.dt_max,
            "dt": dt,
            "dt_mode": cfg.dt,
            "forced": cfg.force,
            "steps": cfg.steps,
            "final_time": cfg.steps as f64 * dt,
            "initial_data": cfg.init,
            "probes": probe_json(&p, &cfg.probes, &probes),
            "window": [window_start, window_end],
            "snapshot_every": cfg.snapshot_every,
            "snapshots": output.snapshot_steps,
            "tolerances": {
                "pcg": cfg.pcg_tol,
                "spectral_bound": cfg.bound_tol,
                "energy_guard": cfg.energy_guard,
            },
            "preconditioner": format!("{:?}", pre.kind()),
            "pcg_iterations_total": output.pcg_iterations_total,
            "pcg_iterations_max": output.pcg_iterations_max,
            "threads": cfg.threads,
            "energy": {
                "initial": e0,
                "first_step": output.energy.get(1),
                "final": e_end,
                "drift": output.energy_drift(),
                "max_deviation": output.max_energy_deviation(),
            },
            "elapsed_seconds": elapsed,
        });
        write_json(&cfg.out.join(MANIFEST), &manifest)
    };
    write().at(Stage::Evolution)?;
    println!("dt = {dt:.6e} ({} steps, T = {:.6})", cfg.steps, cfg.steps as f64 * dt);
    println!("E_d(0) = {e0:.15e}");
    println!("E_d(T) = {e_end:.15e}");
    println!("relative energy drift {:.3e}", output.energy_drift());
    Ok(())
}

/// Probe signals read back from CSV.
pub struct Signals {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
}

pub fn read_signals(path: &Path) -> Result<Signals> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let width = r.headers()?.len();
    if width < 3 {
        bail!("{}: expected columns step,time,probe..., found {width}", path.display());
    }
    let mut s = Signals {
        steps: Vec::new(),
        times: Vec::new(),
        columns: vec![Vec::new(); width - 2],
    };
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |j: usize| -> Result<f64> {
            rec.get(j)
                .ok_or_else(|| anyhow!("row {}: missing column {j}", i + 1))?
                .trim()
                .parse::<f64>()
                .with_context(|| format!("row {}: column {j}", i + 1))
        };
        s.steps.push(rec.get(0).unwrap_or("").trim().parse().with_context(|| format!("row {}: step", i + 1))?);
        s.times.push(field(1)?);
        for (j, c) in s.columns.iter_mut().enumerate() {
            c.push(field(j + 2)?);
        }
    }
    Ok(s)
}

fn spectrum_dt(cfg: &RunConfig, s: &Signals) -> Result<f64> {
    if let TimeStep::Fixed(dt) = cfg.dt {
        return Ok(dt);
    }
    let n = s.steps.len();
    if n < 2 || s.steps[n - 1] == s.steps[0] {
        bail!("cannot infer the time step from fewer than two samples; set dt");
    }
    Ok((s.times[n - 1] - s.times[0]) / (s.steps[n - 1] - s.steps[0]) as f64)
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Outcome<()> {
    let path = cfg.signals.clone().unwrap_or_else(|| cfg.out.join(PROBES));
    let mut s = read_signals(&path).at(Stage::Analysis)?;
    let lo = cfg.window_start.unwrap_or(0);
    let hi = cfg.window_end.unwrap_or(usize::MAX);
    let keep: Vec<bool> = s.steps.iter().map(|&k| k >= lo && k <= hi).collect();
    let filter = |v: &mut Vec<f64>| {
        let mut it = keep.iter();
        v.retain(|_| *it.next().unwrap());
    };
    s.columns.iter_mut().for_each(filter);
    filter(&mut s.times);
    s.steps = s.steps.iter().zip(&keep).filter(|(_, &k)| k).map(|(&x, _)| x).collect();
    if s.steps.is_empty() {
        return Err(anyhow!("no samples in the recording window [{lo}, {hi}]")).at(Stage::Analysis);
    }
    if s.steps.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(anyhow!("probe samples are not consecutive steps")).at(Stage::Analysis);
    }
    let dt = spectrum_dt(cfg, &s).at(Stage::Analysis)?;
    if let Err(e) = check_window(s.steps[0], dt, cfg.force_window) {
        log::warn!("{e} (use --force-window to analyse anyway)");
        return Err(e).at(Stage::Analysis);
    }
    let opts = AnalysisOptions {
        window: cfg.window_fn,
        peaks: PeakOptions {
            min_prominence: cfg.prominence,
            max_peaks: cfg.max_peaks,
        },
        match_tol: cfg.match_tol,
        exact_count: cfg.exact_count,
    };
    let report = analyze_signals(&s.columns, dt, &opts).at(Stage::Analysis)?;

    let write = || -> Result<()> {
        let spectra = s
            .columns
            .iter()
            .map(|c| dft_magnitude(&detrend(c), cfg.window_fn))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let mut w = csv::Writer::from_writer(create(&cfg.out.join(SPECTRUM))?);
        let mut header = vec!["bin".to_string(), "q".to_string()];
        header.extend((0..spectra.len()).map(|i| format!("magnitude_{i}")));
        w.write_record(&header)?;
        for j in 0..spectra[0].magnitudes.len() {
            let mut row = vec![j.to_string(), format!("{:.17e}", spectra[0].q_of_bin(j as f64, dt))];
            row.extend(spectra.iter().map(|sp| format!("{:.17e}", sp.magnitudes[j])));
            w.write_record(&row)?;
        }
        w.flush()?;
        let v = json!({
            "signals": path.file_name().map(|f| f.to_string_lossy().into_owned()),
            "dt": dt,
            "samples": s.steps.len(),
            "window": [s.steps[0], s.steps[s.steps.len() - 1]],
            "padded_length": spectra[0].padded_len,
            "options": opts,
            "report": report,
        });
        write_json(&cfg.out.join(REPORT_JSON), &v)?;
        let mut t = create(&cfg.out.join(REPORT_TXT))?;
        report.write_table(&mut t)?;
        t.flush()?;
        Ok(())
    };
    write().at(Stage::Analysis)?;
    println!(
        "{} samples from step {} (dt = {dt:.6e}, resolution dq = {:.4e}), {} peaks",
        s.steps.len(),
        s.steps[0],
        report.resolution_dq,
        report.peaks.len()
    );
    report.write_table(std::io::stdout().lock()).at(Stage::Analysis)?;
    Ok(())
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: String,
    ok: bool,
}

pub fn cmd_validate(cfg: &RunConfig) -> Outcome<()> {
    let mut checks = Vec::new();
    let group = generate_group().at(Stage::Mesh)?;
    checks.push(Check {
        name: "group order",
        value: group.len().to_string(),
        ok: group.len() == 120,
    });
    let dist_err = group
        .elements
        .iter()
        .map(|e| TRANSLATION_DISTANCES.iter().map(|d| (e.chi - d).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    checks.push(Check {
        name: "translation distances",
        value: format!("{dist_err:.2e}"),
        ok: dist_err < 1e-12,
    });
    let domain = build_domain();
    let orbit = orbit_vertices(&group, &domain.vertices).at(Stage::Mesh)?;
    checks.push(Check {
        name: "120-cell orbit",
        value: format!("{} points {:?}", orbit.points.len(), orbit.family_counts),
        ok: orbit.points.len() == 600 && orbit.family_counts == [24, 64, 64, 64, 96, 96, 192],
    });
    let mut residual: f64 = 0.0;
    for (k, v) in domain.vertices.iter().enumerate() {
        residual = residual.max((v.norm() - 1.0).abs());
        for f in domain.faces.iter().filter(|f| f.vertex_cycle.contains(&k)) {
            residual = residual.max(f.hyperplane_residual(v).abs()).max(f.ellipsoid_residual(&project(v)).abs());
        }
    }
    checks.push(Check {
        name: "domain vertices on their faces",
        value: format!("{residual:.2e}"),
        ok: residual < 1e-12,
    });

    let mesh = load_mesh(cfg, &domain)?;
    let report = validate_mesh(&domain, &mesh);
    let problems = report.problems(problem_tol(cfg), cfg.edge_ratio_max);
    checks.push(Check {
        name: "mesh",
        value: if problems.is_empty() { "ok".to_string() } else { problems.join("; ") },
        ok: problems.is_empty(),
    });
    let dofs = build_dof_map(&mesh);
    checks.push(Check {
        name: "identified DOFs",
        value: match &dofs {
            Ok(d) => format!("{} (formula {})", d.num_dofs(), d.counts.formula()),
            Err(e) => e.to_string(),
        },
        ok: dofs.as_ref().is_ok_and(|d| d.num_dofs() == d.counts.formula()),
    });

    let v = json!({ "source": mesh_source(cfg), "checks": checks, "mesh": report });
    write_json(&cfg.out.join(VALIDATION), &v).at(Stage::Mesh)?;
    for c in &checks {
        println!("{:<32} {:<4} {}", c.name, if c.ok { "ok" } else { "FAIL" }, c.value);
    }
    if checks.iter().all(|c| c.ok) {
        Ok(())
    } else {
        Err(anyhow!("validation failed")).at(Stage::Mesh)
    }
}

/// Collects the JSON outputs found in the output directory into one summary.
pub fn cmd_report(cfg: &RunConfig) -> Outcome<()> {
    let files = [
        ("mesh", MESH_REPORT),
        ("operators", OPERATORS),
        ("run", MANIFEST),
        ("spectrum", REPORT_JSON),
    ];
    let mut summary = serde_json::Map::new();
    for (key, name) in files {
        let path: PathBuf = cfg.out.join(name);
        if path.exists() {
            summary.insert(key.to_string(), read_json(&path).at(Stage::Usage)?);
        }
    }
    if summary.is_empty() {
        return Err(anyhow!("no outputs found in {}", cfg.out.display())).at(Stage::Usage);
    }
    if let Some(m) = summary.get("mesh").and_then(|m| m.get("report")) {
        println!(
            "mesh: {} vertices, {} tets, relative volume error {}",
            m["num_vertices"], m["num_tets"], m["relative_volume_error"]
        );
    }
    if let Some(o) = summary.get("operators") {
        println!(
            "operators: {} DOFs, lambda_max {}, dt_max {}",
            o["dofs"], o["spectral_bound"]["lambda_max"], o["spectral_bound"]["dt_max"]
        );
    }
    if let Some(r) = summary.get("run") {
        println!(
            "run: dt {}, {} steps, E_d(0) {}, E_d(T) {}, drift {}",
            r["dt"], r["steps"], r["energy"]["initial"], r["energy"]["final"], r["energy"]["drift"]
        );
    }
    if let Some(s) = summary.get("spectrum") {
        println!("spectrum: {} samples, resolution {}", s["samples"], s["report"]["resolution_dq"]);
        println!("{:>5} {:>10} {:>14} {:>14}", "beta", "exact", "numerical", "rel. error");
        for m in s["report"]["matches"].as_array().into_iter().flatten() {
            let beta = m["beta"].as_u64().unwrap_or(0);
            let exact = m["exact_q2"].as_f64().unwrap_or(f64::NAN);
            match (m["detected_q2"].as_f64(), m["relative_error"].as_f64()) {
                (Some(d), Some(e)) => println!("{beta:>5} {exact:>10} {d:>14.4} {e:>14.7e}"),
                _ => println!("{beta:>5} {exact:>10} {:>14} {:>14}", "missing", "-"),
            }
        }
    }
    write_json(&cfg.out.join("summary.json"), &Value::Object(summary)).at(Stage::Usage)?;
    Ok(())
}
