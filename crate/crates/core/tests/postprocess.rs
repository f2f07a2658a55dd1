mod common;

use nbfem::experiments::{preset_circle, preset_sphere, preset_torus, Preset};
use nbfem::levelset::CoefficientMode;
use nbfem::postprocess::{compute_eoc, error_norms, export_vtk, vtk_grid, ErrorNorms};
use proptest::prelude::*;

struct ParsedVtk {
    points: Vec<[f64; 3]>,
    cells: Vec<Vec<usize>>,
    point_fields: Vec<(String, Vec<f64>)>,
    cell_fields: Vec<String>,
}

/// Minimal reader for the legacy ASCII unstructured-grid layout.
fn parse_vtk(text: &str) -> ParsedVtk {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# vtk DataFile Version"));
    lines.next();
    assert_eq!(lines.next(), Some("ASCII"));
    assert_eq!(lines.next(), Some("DATASET UNSTRUCTURED_GRID"));
    let mut out = ParsedVtk { points: vec![], cells: vec![], point_fields: vec![], cell_fields: vec![] };
    let mut section = "";
    while let Some(line) = lines.next() {
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.first().copied() {
            Some("POINTS") => {
                let n: usize = tok[1].parse().unwrap();
                for _ in 0..n {
                    let v: Vec<f64> = lines.next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
                    out.points.push([v[0], v[1], v[2]]);
                }
            }
            Some("CELLS") => {
                let n: usize = tok[1].parse().unwrap();
                let size: usize = tok[2].parse().unwrap();
                let mut seen = 0;
                for _ in 0..n {
                    let v: Vec<usize> = lines.next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
                    assert_eq!(v[0] + 1, v.len());
                    seen += v.len();
                    out.cells.push(v[1..].to_vec());
                }
                assert_eq!(seen, size);
            }
            Some("CELL_TYPES") => {
                let n: usize = tok[1].parse().unwrap();
                for k in 0..n {
                    let t: u8 = lines.next().unwrap().trim().parse().unwrap();
                    let want = match out.cells[k].len() {
                        3 => 5,
                        4 => 10,
                        _ => panic!("unexpected cell size"),
                    };
                    assert_eq!(t, want);
                }
            }
            Some("POINT_DATA") => section = "point",
            Some("CELL_DATA") => section = "cell",
            Some("SCALARS") => {
                assert_eq!(lines.next(), Some("LOOKUP_TABLE default"));
                let n = if section == "point" { out.points.len() } else { out.cells.len() };
                let vals: Vec<f64> = (0..n).map(|_| lines.next().unwrap().trim().parse().unwrap()).collect();
                if section == "point" {
                    out.point_fields.push((tok[1].to_string(), vals));
                } else {
                    out.cell_fields.push(tok[1].to_string());
                }
            }
            None => {}
            Some(other) => panic!("unexpected line {other}"),
        }
    }
    out
}

fn exact_norms<const D: usize>(preset: &Preset<D>, lv: &common::Level<D>, coefficients: &[f64]) -> ErrorNorms {
    error_norms(&lv.space, coefficients, &preset.surface, &lv.quad, |y| preset.u(y), |y| preset.grad_u(y)).unwrap().0
}

fn interpolant<const D: usize>(preset: &Preset<D>, lv: &common::Level<D>) -> Vec<f64> {
    lv.space.interpolate(|x| preset.u(&preset.surface.closest_point(x).unwrap()))
}

#[test]
fn vtk_round_trip_reproduces_the_grid() {
    let circle = preset_circle();
    let lv = common::level(&circle, 5.0, CoefficientMode::ExactHessian, 1, 2);
    let u = common::solve(&lv.space, &lv.system);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("circle.vtk");
    export_vtk(&lv.space, &u, &path).unwrap();
    let parsed = parse_vtk(&std::fs::read_to_string(&path).unwrap());
    let grid = vtk_grid(&lv.space, &u).unwrap();
    assert_eq!(parsed.points.len(), grid.points.len());
    for (a, b) in parsed.points.iter().zip(&grid.points) {
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-9);
        }
    }
    assert_eq!(parsed.cells, grid.cells);
    assert_eq!(parsed.cells.len(), lv.space.num_cells());
    // u_h at the points is the nodal solution for P1
    let (_, uh) = &parsed.point_fields[0];
    for (p, v) in parsed.points.iter().zip(uh) {
        let x = [p[0], p[1]];
        let pos = lv.space.locate(&x).unwrap();
        assert!((lv.space.evaluate(&u, pos, &x).unwrap().0 - v).abs() < 1e-9);
    }
}

#[test]
fn sphere_vtk_points_are_the_dofs() {
    let sphere = preset_sphere();
    let lv = common::level(&sphere, 1.0, CoefficientMode::ExactHessian, 1, 1);
    let u = common::solve(&lv.space, &lv.system);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sphere.vtk");
    export_vtk(&lv.space, &u, &path).unwrap();
    let parsed = parse_vtk(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(parsed.points.len(), lv.space.num_dofs());
    assert!(parsed.cells.iter().all(|c| c.len() == 4));
}

#[test]
fn torus_vtk_has_fields() {
    let torus = preset_torus();
    let lv = common::level(&torus, 1.0, CoefficientMode::ExactHessian, 1, 1);
    let u = common::solve(&lv.space, &lv.system);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("torus.vtk");
    export_vtk(&lv.space, &u, &path).unwrap();
    let parsed = parse_vtk(&std::fs::read_to_string(&path).unwrap());
    assert!(parsed.cells.len() >= 10_000, "{} cells", parsed.cells.len());
    let names: Vec<&str> = parsed.point_fields.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["u_h", "phi"]);
    assert_eq!(parsed.cell_fields, ["class"]);
    // phi is the exact distance at the points
    let (_, phi) = &parsed.point_fields[1];
    for (p, v) in parsed.points.iter().zip(phi) {
        assert!((torus.surface.signed_distance(p) - v).abs() < 1e-12);
    }
}

#[test]
fn constant_interpolant_has_zero_error() {
    let circle = preset_circle();
    let lv = common::level(&circle, 5.0, CoefficientMode::ExactHessian, 1, 3);
    let c = lv.space.interpolate(|_| 2.5);
    let e = error_norms(&lv.space, &c, &circle.surface, &lv.quad, |_| 2.5, |_| [0.0; 2]).unwrap().0;
    assert!(e.l2_gamma < 1e-13 && e.h1_gamma < 1e-13 && e.h1_band < 1e-13, "{e:?}");
    let sphere = preset_sphere();
    let lv = common::level(&sphere, 1.0, CoefficientMode::ExactHessian, 1, 0);
    let c = lv.space.interpolate(|_| -1.0);
    let e = error_norms(&lv.space, &c, &sphere.surface, &lv.quad, |_| -1.0, |_| [0.0; 3]).unwrap().0;
    assert!(e.l2_gamma < 1e-13 && e.h1_gamma < 1e-13 && e.h1_band < 1e-13, "{e:?}");
}

#[test]
fn band_error_rate_with_shrinking_band() {
    let circle = preset_circle();
    let e: Vec<f64> = [4, 5]
        .iter()
        .map(|&l| {
            let lv = common::level(&circle, 1.0, CoefficientMode::ExactHessian, 1, l);
            let u = common::solve(&lv.space, &lv.system);
            exact_norms(&circle, &lv, &u).h1_band
        })
        .collect();
    let ratio = e[0] / e[1];
    assert!((ratio - 2f64.powf(1.5)).abs() <= 0.25 * 2f64.powf(1.5), "ratio {ratio}");
}

fn interpolant_and_galerkin_errors(levels: std::ops::RangeInclusive<u32>) -> Vec<(ErrorNorms, ErrorNorms)> {
    let circle = preset_circle();
    levels
        .map(|level| {
            let lv = common::level(&circle, 1.0, CoefficientMode::ExactHessian, 1, level);
            let u = common::solve(&lv.space, &lv.system);
            (exact_norms(&circle, &lv, &interpolant(&circle, &lv)), exact_norms(&circle, &lv, &u))
        })
        .collect()
}

#[test]
fn band_error_of_interpolant_is_below_galerkin_error() {
    for (k, (ei, eg)) in interpolant_and_galerkin_errors(2..=5).iter().enumerate() {
        assert!(ei.h1_band < eg.h1_band, "level {}: interpolant {:e} vs Galerkin {:e}", k + 2, ei.h1_band, eg.h1_band);
    }
}

#[test]
fn surface_l2_error_of_interpolant_is_below_galerkin_error() {
    for (k, (ei, eg)) in interpolant_and_galerkin_errors(2..=5).iter().enumerate() {
        assert!(ei.l2_gamma < eg.l2_gamma, "level {}: {ei:?} vs {eg:?}", k + 2);
    }
}

#[test]
fn interpolant_errors_converge_at_the_galerkin_order() {
    let circle = preset_circle();
    let mut hs = Vec::new();
    let mut l2 = Vec::new();
    let mut h1 = Vec::new();
    for level in 3..=6 {
        let lv = common::level(&circle, 5.0, CoefficientMode::ExactHessian, 1, level);
        let e = exact_norms(&circle, &lv, &interpolant(&circle, &lv));
        hs.push(lv.h);
        l2.push(e.l2_gamma);
        h1.push(e.h1_gamma);
    }
    let last = |v: Vec<f64>| *v.last().unwrap();
    assert!((last(compute_eoc(&l2, &hs).unwrap()) - 2.0).abs() < 0.2);
    assert!((last(compute_eoc(&h1, &hs).unwrap()) - 1.0).abs() < 0.1);
}

fn check_monotone<const D: usize>(preset: &Preset<D>, gamma: f64, levels: std::ops::RangeInclusive<u32>) {
    let norms: Vec<ErrorNorms> = levels
        .map(|l| {
            let lv = common::level(preset, gamma, CoefficientMode::ExactHessian, 1, l);
            let u = common::solve(&lv.space, &lv.system);
            exact_norms(preset, &lv, &u)
        })
        .collect();
    let steps = |f: fn(&ErrorNorms) -> f64| norms.windows(2).filter(|w| f(&w[1]) >= f(&w[0])).count();
    assert!(steps(|e| e.l2_gamma) <= 1, "{norms:?}");
    assert_eq!(steps(|e| e.h1_gamma), 0, "{norms:?}");
    assert_eq!(steps(|e| e.h1_band), 0, "{norms:?}");
}

#[test]
fn errors_decrease_under_refinement() {
    check_monotone(&preset_circle(), 5.0, 2..=6);
    check_monotone(&preset_circle(), 1.0, 2..=6);
    check_monotone(&preset_sphere(), 1.0, 0..=2);
}

#[test]
fn circle_magnitudes_at_level_four() {
    let circle = preset_circle();
    let lv = common::level(&circle, 5.0, CoefficientMode::ExactHessian, 1, 4);
    let u = common::solve(&lv.space, &lv.system);
    let e = exact_norms(&circle, &lv, &u);
    let within = |got: f64, want: f64| got / want <= 2.0 && want / got <= 2.0;
    assert!(within(e.l2_gamma, 2.34e-4), "{e:?}");
    assert!(within(e.h1_gamma, 7.98e-2), "{e:?}");
}

#[test]
fn eoc_of_table_sequences() {
    let e = compute_eoc(&[6.22e-1, 3.18e-1], &[0.2, 0.1]).unwrap();
    assert!((e[0] - 0.97).abs() < 5e-3);
    let e = compute_eoc(&[2.03e-2, 5.29e-3], &[0.2, 0.1]).unwrap();
    assert!((e[0] - 1.94).abs() < 5e-3);
    assert!(compute_eoc(&[1.0, 0.0], &[0.2, 0.1]).is_err());
}

proptest! {
    #[test]
    fn eoc_recovers_synthetic_rates(rate in 0.1f64..5.0, c in 1e-6f64..1e3, h0 in 1e-3f64..1.0, q in 1.2f64..4.0, n in 2usize..8) {
        let hs: Vec<f64> = (0..n).map(|k| h0 / q.powi(k as i32)).collect();
        let es: Vec<f64> = hs.iter().map(|h| c * h.powf(rate)).collect();
        for e in compute_eoc(&es, &hs).unwrap() {
            prop_assert!((e - rate).abs() < 1e-9);
        }
    }
}
