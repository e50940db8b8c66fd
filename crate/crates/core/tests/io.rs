mod common;

use common::rng;
use hlbm::io::*;
use hlbm::lattice::{InitialCondition, MacroFields, Simulation, SimulationConfig};
use hlbm::regime::Permeability;
use hlbm::Error;
use proptest::prelude::*;
use rand::Rng;

const SAMPLE: &str = "\
# channel run
[grid]
nx = 4
ny = 32
steps = 5000
[physics]
tau_lb = 0.9
force_x = 1e-6
[porosity]
K = 120.5
[boundary]
x = periodic
y = wall
[output]
dir = out
name = channel
format = both
every = 1000
";

fn random_fields(nx: usize, ny: usize, seed: u64) -> MacroFields {
    let mut r = rng(seed);
    let n = nx * ny;
    MacroFields {
        nx,
        ny,
        rho: (0..n).map(|_| 1.0 + r.gen_range(-0.1..0.1)).collect(),
        u: (0..n)
            .map(|_| [r.gen_range(-0.1..0.1), r.gen_range(-0.1..0.1)])
            .collect(),
        p: (0..n).map(|_| r.gen_range(0.3..0.4)).collect(),
    }
}

#[test]
fn sample_config_resolves() {
    let c = parse_config(SAMPLE).unwrap();
    let s = &c.settings;
    assert_eq!((s.nx, s.ny, s.steps), (4, 32, 5000));
    assert_eq!(s.tau, 0.9);
    assert_eq!(s.force, [1e-6, 0.0]);
    assert_eq!(s.permeability, Permeability::Finite(120.5));
    assert_eq!(s.format, OutputFormat::Both);
    assert_eq!(s.output_every, 1000);
    assert_eq!(c.provenance.source, SAMPLE);
}

#[test]
fn serialized_config_parses_back_identically() {
    let c = parse_config(SAMPLE).unwrap();
    let again = parse_config(&c.to_text()).unwrap();
    assert_eq!(again.settings, c.settings);
    assert_eq!(
        parse_config(&again.to_text()).unwrap().to_text(),
        c.to_text()
    );
}

#[test]
fn overrides_win_over_the_file() {
    let c = parse_config_with(SAMPLE, &["porosity.K=inf".into(), "grid.NX=8".into()]).unwrap();
    assert_eq!(c.settings.permeability, Permeability::Infinite);
    assert_eq!(c.settings.nx, 8);
    assert!(c.header().contains("# --set porosity.K=inf"));
    let d = ResolvedConfig::from_overrides(&["grid.nx=3".into()]).unwrap();
    assert_eq!((d.settings.nx, d.settings.ny), (3, 64));
}

#[test]
fn all_errors_are_reported_with_lines() {
    let text = "[grid]\nnx = 8\nwidth = 3\nnx = 9\n[physics]\ntau_lb = 0.4\n[mesh]\n";
    let Err(Error::Config(errors)) = parse_config(text) else {
        panic!("expected config errors");
    };
    let lines: Vec<Option<usize>> = errors.iter().map(|e| e.line).collect();
    assert!(lines.contains(&Some(3)), "{errors:?}");
    assert!(lines.contains(&Some(4)));
    assert!(lines.contains(&Some(6)));
    assert!(lines.contains(&Some(7)));
    assert!(errors
        .iter()
        .any(|e| e.line.is_none() && e.message.contains("grid.ny")));
    assert!(errors.iter().any(|e| e
        .message
        .contains("relaxation time must exceed 0.5, got 0.4")));
}

#[test]
fn negative_permeability_names_the_constraint() {
    let Err(err) = parse_config("[grid]\nnx=4\nny=4\n[porosity]\nK = -1") else {
        panic!("accepted K = -1");
    };
    assert!(err.to_string().contains("porosity-control"), "{err}");
}

#[test]
fn vtk_matches_golden_text() {
    let fields = MacroFields {
        nx: 2,
        ny: 1,
        rho: vec![1.0, 0.5],
        u: vec![[0.25, 0.0], [-0.125, 1.0]],
        p: vec![1.0 / 3.0, 0.5 / 3.0],
    };
    let golden = "\
# vtk DataFile Version 3.0
t
ASCII
DATASET STRUCTURED_POINTS
DIMENSIONS 2 1 1
ORIGIN 0 0 0
SPACING 1 1 1
POINT_DATA 2
SCALARS rho double 1
LOOKUP_TABLE default
1.0000000000000000e0
5.0000000000000000e-1
VECTORS velocity double
2.5000000000000000e-1 0.0000000000000000e0 0
-1.2500000000000000e-1 1.0000000000000000e0 0
SCALARS p double 1
LOOKUP_TABLE default
3.3333333333333331e-1
1.6666666666666666e-1
";
    assert_eq!(fields_vtk(&fields, "t"), golden);
}

#[test]
fn csv_round_trips_bitwise() {
    let fields = random_fields(7, 5, 51);
    let text = fields_csv(&fields, "note");
    assert!(text.starts_with("# note\nx,y,rho,ux,uy,p\n"));
    assert_eq!(parse_fields_csv(&text).unwrap(), fields);
}

#[test]
fn small_grid_has_one_row_per_cell() {
    let fields = random_fields(2, 2, 52);
    let text = fields_csv(&fields, "");
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    let idx: Vec<&str> = rows.iter().map(|r| &r[..3]).collect();
    assert_eq!(idx, ["0,0", "1,0", "0,1", "1,1"]);
}

#[test]
fn written_files_carry_the_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let config = parse_config(SAMPLE).unwrap().stamp_now();
    let fields = random_fields(4, 3, 53);
    let path = output_path(dir.path(), "run", 42, FieldFormat::Csv);
    assert!(path.ends_with("run_00000042.csv"));
    write_fields(&fields, FieldFormat::Csv, &path, Some(&config)).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("# timestamp "));
    assert!(text.contains("# K = 1.2050000000000000e2"));
    assert_eq!(read_fields_csv(&path).unwrap(), fields);
}

#[test]
fn non_finite_fields_and_bad_paths_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut fields = random_fields(2, 2, 54);
    let missing = dir.path().join("no/such/dir/f.csv");
    assert!(matches!(
        write_fields(&fields, FieldFormat::Csv, &missing, None),
        Err(Error::Io { .. })
    ));
    fields.u[1][0] = f64::NAN;
    assert!(write_fields(&fields, FieldFormat::Vtk, &dir.path().join("f.vtk"), None).is_err());
}

#[test]
fn identical_runs_write_identical_files() {
    let write = || {
        let config = SimulationConfig::new(6, 4, 0.7)
            .with_force([1e-5, 0.0])
            .with_initial(InitialCondition::Uniform {
                rho: 1.0,
                u: [0.01, 0.02],
            });
        let mut sim = Simulation::new(&config).unwrap();
        sim.advance(50).unwrap();
        (
            fields_csv(&sim.macroscopic(), "run"),
            fields_vtk(&sim.macroscopic(), "run"),
        )
    };
    assert_eq!(write(), write());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_settings_survive_serialization(
        nx in 1usize..500, ny in 1usize..500, tau in 0.5001f64..3.0,
        fx in -1e-3f64..1e-3, k_scale in 1.0f64..1e6, finite in any::<bool>(),
    ) {
        let k = if finite { format!("{:e}", k_scale * tau * tau) } else { "inf".into() };
        let text = format!("[grid]\nnx={nx}\nny={ny}\n[physics]\ntau_lb={tau:e}\nforce_x={fx:e}\n[porosity]\nK={k}\n");
        let c = parse_config(&text).unwrap();
        let again = parse_config(&c.to_text()).unwrap();
        prop_assert_eq!(again.settings, c.settings);
    }
}
