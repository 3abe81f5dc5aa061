//! End-to-end checks through the public API: files on disk, identified DOFs,
//! operators, evolution and spectral analysis.

use nalgebra::Vector3;

use pds_core::assembly::{assemble, build_dof_map, estimate_spectral_bound, quadrature_rule};
use pds_core::domain::build_domain;
use pds_core::evolve::{initial_bump, leapfrog_run, snap_probes, LeapfrogOptions, Preconditioner, ProbeSet, WaveState};
use pds_core::icosian::generate_group;
use pds_core::mesh::io::{export_mesh, import_mesh};
use pds_core::mesh::validate::validate_mesh;
use pds_core::mesh::generate_mesh;
use pds_core::spectra::{analyze_signals, AnalysisOptions};

#[test]
fn exported_mesh_imports_to_the_same_operators() {
    let d = build_domain();
    let dir = tempfile::tempdir().unwrap();
    let (node, ele) = (dir.path().join("m.node"), dir.path().join("m.ele"));
    let m = generate_mesh(&d, 2, 2, 1.0).unwrap();
    export_mesh(&m, &node, &ele).unwrap();
    let back = import_mesh(&d, &node, &ele, 1e-9).unwrap();
    assert_eq!(back.vertices, m.vertices);
    assert_eq!(back.tets, m.tets);
    assert_eq!(validate_mesh(&d, &back), validate_mesh(&d, &m));

    let rule = quadrature_rule(4).unwrap();
    let (da, db) = (build_dof_map(&m).unwrap(), build_dof_map(&back).unwrap());
    assert_eq!(da.node_to_dof, db.node_to_dof);
    let (a, b) = (assemble(&m, &da, &rule).unwrap(), assemble(&back, &db, &rule).unwrap());
    assert_eq!(a.mass.values, b.mass.values);
    assert_eq!(a.wave_operator().values, b.wave_operator().values);
}

#[test]
fn coarse_pipeline_finds_the_first_eigenvalue() {
    let d = build_domain();
    let g = generate_group().unwrap();
    let m = generate_mesh(&d, 4, 4, 1.0).unwrap();
    let dofs = build_dof_map(&m).unwrap();
    let ops = assemble(&m, &dofs, &quadrature_rule(4).unwrap()).unwrap();
    let wave = ops.wave_operator();
    let bound = estimate_spectral_bound(&ops.mass, &wave, 1e-4).unwrap();
    let dt = 0.95 * bound.dt_max;
    let pre = Preconditioner::for_mass(&ops.mass);
    let u0 = initial_bump(&d, &g, &m, &dofs, &Vector3::zeros(), 0.3, 100.0).unwrap();
    let state = WaveState::taylor_start(u0, None, dt, &ops.mass, &wave, &pre, 1e-12).unwrap();

    let start = (0.776_279 / dt).ceil() as usize;
    let steps = start + (25.0 / dt) as usize;
    let probes = snap_probes(&m, &dofs, &[Vector3::zeros(), Vector3::new(0.1, 0.05, 0.0)]);
    let mut set = ProbeSet::new(probes, (start, steps));
    let opts = LeapfrogOptions {
        steps,
        ..Default::default()
    };
    let out = leapfrog_run(state, &ops.mass, &wave, &pre, &opts, &mut set, |_, _| Ok(())).unwrap();
    assert!(out.energy_drift() < 1e-9);

    let report = analyze_signals(
        &set.samples,
        dt,
        &AnalysisOptions {
            exact_count: 2,
            ..Default::default()
        },
    )
    .unwrap();
    // the coarse mesh shifts q² = 168 upward by a few percent (P1 dispersion)
    let first = &report.matches[0];
    let err = first.relative_error.expect("first eigenvalue detected");
    assert!(first.detected_q2.unwrap() > 168.0 && err < 0.1, "{first:?}");
}
