use super::*;
use crate::analysis::ManufacturedSolution;
use crate::polymesh::{generate, MeshFamily};
use crate::polyquad::cell_quadrature;
use crate::weakops::{default_degrees, weak_curlcurl_operator};
use crate::Error;

fn zero_problem_system(family: MeshFamily, level: usize) -> SaddleSystem {
    let mesh = generate(family, level).unwrap();
    let load = |_| [0.0; 3];
    assemble(&mesh, &Problem { load: &load, boundary: None }, &AssemblyOptions::default()).unwrap()
}

#[test]
fn blocks_are_exactly_symmetric() {
    let sys = zero_problem_system(MeshFamily::NonconvexPoly2d, 2);
    for block in [Block::A, Block::C] {
        let m = sys.dense_block(block);
        for i in 0..m.nrows() {
            for j in 0..i {
                assert_eq!(m[(i, j)], m[(j, i)]);
            }
        }
    }
    let k = sys.matrix.as_ref();
    let n = sys.size();
    let mut dense = faer::Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for (i, v) in k.row_idx_of_col(j).zip(k.val_of_col(j)) {
            dense[(i, j)] = *v;
        }
    }
    for i in 0..n {
        for j in 0..i {
            assert_eq!(dense[(i, j)], dense[(j, i)]);
        }
    }
}

#[test]
fn zero_data_gives_zero_rhs_and_zero_solution() {
    let sys = zero_problem_system(MeshFamily::CrisscrossTri2d, 2);
    assert!(sys.rhs.iter().all(|v| *v == 0.0));
    let (x, _) = solve(&sys, &SolverOptions::default()).unwrap();
    assert!(x.iter().all(|v| *v == 0.0));
}

#[test]
fn free_unknowns_exclude_boundary_faces() {
    let mesh = generate(MeshFamily::CrisscrossTri2d, 1).unwrap();
    let sys = zero_problem_system(MeshFamily::CrisscrossTri2d, 1);
    let layout = &sys.dofs.layout;
    assert_eq!(sys.dofs.n_v() + sys.dofs.n_w(), sys.size());
    for f in mesh.boundary_faces() {
        for t in 0..layout.v_face_len() {
            assert_eq!(sys.dofs.v_row(layout.v_face(f) + t), None);
        }
    }
    // 4 cells, k = 2: v0 has 12 unknowns per cell, the 4 interior edges
    // carry 3 + 2 each; W has 6 per cell and 3 per interior edge.
    assert_eq!(sys.dofs.n_v(), 4 * 12 + 4 * 5);
    assert_eq!(sys.dofs.n_w(), 4 * 6 + 4 * 3);
}

// Entries of A between interior unknowns of one cell, recomputed by
// quadrature of the weak curl-curl of each basis function.
#[test]
fn stiffness_matches_direct_quadrature() {
    let mesh = generate(MeshFamily::CrisscrossTri2d, 2).unwrap();
    let sys = zero_problem_system(MeshFamily::CrisscrossTri2d, 2);
    let layout = &sys.dofs.layout;
    let a = sys.dense_block(Block::A);
    let cell = 5;
    let deg = default_degrees(&mesh, cell, 2).unwrap();
    let op = weak_curlcurl_operator(&mesh, cell, 2, deg.r1).unwrap();
    let rule = cell_quadrature(&mesh, cell, 2 * deg.r1 + 2).unwrap();
    let local = layout.local_v_dofs(&mesh, cell);
    let unit = |i: usize| (0..local.len()).map(|j| f64::from(u8::from(i == j))).collect::<Vec<_>>();
    let interior = 2 * layout.nk;
    for i in 0..interior {
        for j in 0..interior {
            let (ui, uj) = (unit(i), unit(j));
            let direct: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| w * crate::geometry::dot(op.eval(&ui, *x, 2), op.eval(&uj, *x, 2)))
                .sum();
            let (ri, rj) = (sys.dofs.v_row(local[i]).unwrap(), sys.dofs.v_row(local[j]).unwrap());
            assert!((a[(ri, rj)] - direct).abs() <= 1e-9 * (1.0 + direct.abs()), "{i} {j}: {} vs {direct}", a[(ri, rj)]);
        }
    }
}

#[test]
fn manufactured_solve_meets_tolerance_and_is_repeatable() {
    let mesh = generate(MeshFamily::CrisscrossTri2d, 2).unwrap();
    let exact = ManufacturedSolution::e1_2d();
    let sys = exact.with_problem(|p, _| assemble(&mesh, &p, &AssemblyOptions::default())).unwrap();
    let (x, report) = solve(&sys, &SolverOptions::default()).unwrap();
    let r: Vec<f64> = sys.apply(&x).iter().zip(&sys.rhs).map(|(a, b)| a - b).collect();
    assert!(norm2(&r) <= 1e-10 * norm2(&sys.rhs));
    assert!(report.relative_residual <= 1e-10);
    let (y, _) = solve(&sys, &SolverOptions::default()).unwrap();
    assert_eq!(x, y);
}

#[test]
fn dof_cap_is_enforced() {
    let mesh = generate(MeshFamily::CrisscrossTri2d, 2).unwrap();
    let load = |_| [0.0; 3];
    let opts = AssemblyOptions { dof_cap: Some(100), ..Default::default() };
    let err = assemble(&mesh, &Problem { load: &load, boundary: None }, &opts).unwrap_err();
    assert!(matches!(err, Error::DofCapExceeded { dofs: 448, cap: 100 }));
}

#[test]
fn dump_lists_every_entry() {
    let sys = zero_problem_system(MeshFamily::CrisscrossTri2d, 1);
    let mut buf = Vec::new();
    sys.dump(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    let head: Vec<usize> = lines.next().unwrap().split(' ').map(|t| t.parse().unwrap()).collect();
    assert_eq!(head[0], sys.size());
    let triplets: Vec<&str> = lines.by_ref().take(head[1]).collect();
    assert!(triplets.iter().all(|l| l.split(' ').count() == 3));
    assert_eq!(lines.count(), sys.size());
}
