use scdg::diagnostics::{
    conservation_ledger, entropy_ledger, lemma_sums, spectral_bounds_of_states, spectral_monitor, weak_bv_report,
    RunDiagnostics, CONDITION_WARNING,
};
use scdg::entropy_flux::EntropyStableFlux;
use scdg::systems::{ConservationSystem, ShallowWater, StateVector};
use scdg::{run_simulation, RunConfig};

fn config(system: &str, cells: usize, t_final: f64, initial: &str, extra: &str) -> RunConfig {
    let text = format!(
        r#"
[system]
name = "{system}"

[mesh]
cells = {cells}
domain = [0.0, 1.0]
aspect = 0.5

[time]
t_final = {t_final:?}

[initial]
{initial}
{extra}
"#
    );
    RunConfig::from_toml_str(&text).unwrap()
}

const CONSTANTS: [(&str, &str); 3] = [
    ("burgers", "kind = \"constant\"\nstate = [0.7]"),
    (
        "shallow_water",
        "kind = \"constant\"\nprimitive = true\nstate = [1.3, -0.4]",
    ),
    (
        "euler",
        "kind = \"constant\"\nprimitive = true\nstate = [0.9, 0.3, 1.7]",
    ),
];

const BURGERS_RIEMANN: &str = "kind = \"riemann\"\nleft = [1.0]\nright = [0.0]\nposition = 0.5";
const BURGERS_SINE: &str = "kind = \"sine\"\nbase = [0.5]\namplitude = [0.25]";
const HALF_C1: &str = "[viscosity]\nalpha1 = 1.0\nalpha2 = 1.0\ntheta = 0.5\nc1_sc = 0.5\nc2_sc = 1.0";

fn run(cfg: &RunConfig) -> RunDiagnostics {
    let out = run_simulation(cfg).unwrap();
    assert!(out.failure.is_none(), "{:?}", out.failure);
    out.diagnostics
}

#[test]
fn zero_slabs_leave_only_initial_entries() {
    let cfg = config("burgers", 8, 0.0, BURGERS_SINE, "");
    let out = run_simulation(&cfg).unwrap();
    assert!(out.slabs.is_empty());
    assert!(out.diagnostics.slabs.is_empty());
    assert!((out.diagnostics.initial_mass[0] - 0.5).abs() < 1e-12);
    assert_eq!(out.final_trace().coefficients, out.initial.coefficients);
}

#[test]
fn constant_runs_are_flat() {
    for (system, initial) in CONSTANTS {
        let mut levels = Vec::new();
        for cells in [8, 16] {
            let mut cfg = config(system, cells, 0.0, initial, "");
            cfg.time.slabs = Some(10);
            cfg.time.t_final = 10.0 * 0.5 / cells as f64;
            let d = run(&cfg);
            assert_eq!(d.slabs.len(), 10);
            for s in &d.slabs {
                for (a, b) in s.mass.iter().zip(&d.initial_mass) {
                    assert!((a - b).abs() <= 1e-12, "{system}: mass {a} vs {b}");
                }
                assert!((s.entropy - d.initial_entropy).abs() <= 1e-12, "{system}");
                assert_eq!(s.eps_max, 0.0);
                assert_eq!(s.newton_iterations, 1);
            }
            assert!(conservation_ledger(&d).pass);
            assert!(entropy_ledger(&d).pass);
            levels.push(d);
        }
        let bv = weak_bv_report(&levels).unwrap();
        for row in &bv.rows {
            assert_eq!(
                [
                    row.temporal_jumps,
                    row.spatial_jumps,
                    row.res_grad,
                    row.bres_grad,
                    row.dissipation_total
                ],
                [0.0; 5],
                "{system}"
            );
        }
        let lemma = lemma_sums(&levels, 1.5, 1.0).unwrap();
        assert!(lemma.rows.iter().all(|r| r.res == 0.0 && r.bres == 0.0));
    }
}

#[test]
fn burgers_riemann_dissipates_entropy() {
    let d = run(&config("burgers", 32, 0.15, BURGERS_RIEMANN, HALF_C1));
    let ledger = entropy_ledger(&d);
    assert!(ledger.pass, "{ledger:?}");
    assert!(ledger.rows.iter().all(|r| r.change < 0.0));
    assert!(conservation_ledger(&d).pass);
    assert_eq!(d.spectral.uv_min, 1.0);
    assert_eq!(d.spectral.uv_max, 1.0);
}

#[test]
fn tampered_ledgers_fail() {
    let mut d = run(&config("burgers", 16, 0.1, BURGERS_RIEMANN, HALF_C1));
    assert!(entropy_ledger(&d).pass);
    let mut reversed = d.clone();
    let entropies: Vec<f64> = reversed.slabs.iter().map(|s| s.entropy).collect();
    for (s, e) in reversed.slabs.iter_mut().zip(entropies.iter().rev()) {
        s.entropy = *e;
    }
    reversed.initial_entropy = *entropies.last().unwrap();
    assert!(!entropy_ledger(&reversed).monotone);
    d.slabs.last_mut().unwrap().mass[0] += 1e-8;
    assert!(!conservation_ledger(&d).pass);
}

#[test]
fn smooth_burgers_refinement_trends() {
    let levels: Vec<RunDiagnostics> = [16, 32, 64]
        .iter()
        .map(|&n| run(&config("burgers", n, 0.3, BURGERS_SINE, "")))
        .collect();
    let bv = weak_bv_report(&levels).unwrap();
    assert!(bv.pass);
    assert!(scdg::diagnostics::decreasing(
        &bv.rows.iter().map(|r| r.temporal_jumps).collect::<Vec<_>>()
    ));
    assert!(scdg::diagnostics::decreasing(
        &bv.rows.iter().map(|r| r.spatial_jumps).collect::<Vec<_>>()
    ));
    let at = lemma_sums(&levels, 1.5, 1.0).unwrap();
    assert!(at.res_pass && at.bres_pass, "{at:?}");
    let above = lemma_sums(&levels, 2.0, 1.5).unwrap();
    assert!(above.res_pass && above.bres_pass, "{above:?}");
    assert!(lemma_sums(&levels[..1], 1.5, 1.0).is_err());
    assert!(weak_bv_report(&levels[..1]).is_err());
}

#[test]
fn far_field_dam_break_balances_with_boundary_fluxes() {
    let initial = "kind = \"riemann\"\nprimitive = true\nleft = [2.0, 0.0]\nright = [1.0, 0.0]\nposition = 0.5";
    let mut cfg = config("shallow_water", 32, 0.1, initial, "");
    cfg.mesh.boundary = scdg::mesh_basis::Boundary::FarField;
    let d = run(&cfg);
    let c = conservation_ledger(&d);
    assert!(c.pass, "{c:?}");
    assert!(entropy_ledger(&d).pass);
}

#[test]
fn euler_sod_reports_positive_symmetrizer() {
    let initial =
        "kind = \"riemann\"\nprimitive = true\nleft = [1.0, 0.0, 1.0]\nright = [0.125, 0.0, 0.1]\nposition = 0.5";
    let mut cfg = config("euler", 24, 0.05, initial, "");
    cfg.mesh.boundary = scdg::mesh_basis::Boundary::FarField;
    let d = run(&cfg);
    assert!(d.spectral.uv_min > 0.0);
    assert!(d.spectral.d_min > 0.0);
    assert!(d.spectral.fu_max_singular.is_finite());
    assert!(entropy_ledger(&d).pass);
}

#[test]
fn near_dry_shallow_water_warns() {
    let sys = ShallowWater::new(1.0, 1e-12).unwrap();
    let flux = EntropyStableFlux::default_for(&sys);
    let states: Vec<StateVector> = [1.0, 1e-3, 1e-7]
        .iter()
        .map(|&h| sys.entropy_variables(&sys.from_primitive(&[h, 0.1]).unwrap()).unwrap())
        .collect();
    let bounds = spectral_bounds_of_states(&sys, &flux, &states).unwrap();
    assert!(bounds.condition() > CONDITION_WARNING);

    let cfg = config(
        "shallow_water",
        8,
        0.05,
        "kind = \"constant\"\nprimitive = true\nstate = [1e-7, 0.0]",
        "",
    );
    let d = run(&cfg);
    assert!(
        d.warnings.iter().any(|w| w.contains("ill-conditioned")),
        "{:?}",
        d.warnings
    );
    let report = spectral_monitor(&[d.clone(), d]);
    assert!(!report.warnings.is_empty());
}

#[test]
fn reruns_are_bitwise_identical() {
    let cfg = config("burgers", 16, 0.1, BURGERS_RIEMANN, HALF_C1);
    let (a, b) = (run_simulation(&cfg).unwrap(), run_simulation(&cfg).unwrap());
    assert_eq!(a.final_trace().coefficients, b.final_trace().coefficients);
    assert_eq!(a.diagnostics, b.diagnostics);
}
