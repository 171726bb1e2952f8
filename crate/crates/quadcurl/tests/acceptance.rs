//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use quadcurl::analysis::symbolic::{self, c, x, y, z, Expr, VectorExpr};
use quadcurl::analysis::{error_equation_residual, norm_equivalence_probe, Column, ConvergenceReport, ManufacturedSolution};
use quadcurl::geometry::{self, Point};
use quadcurl::polymesh::{generate, MeshFamily, PolytopalMesh};
use quadcurl::polyquad::cell_quadrature;
use quadcurl::study::{run_level, run_study, LevelRange, StudyConfig};
use quadcurl::weakops::{default_degrees, interpolate_v, interpolate_w, CellOperators, FieldV, LocalWeakOperator, SpaceLayout};
use quadcurl::wgsystem::{assemble, AssemblyOptions, Block, SolverOptions};
use quadcurl::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::time::Instant;

const COMMUTATION_TOL: f64 = 1e-9;
const COMMUTATION_SAMPLES: usize = 200;
const COMMUTATION_SECONDS: f64 = 30.0;
const UNIQUENESS_TOL: f64 = 1e-8;
const RESIDUAL_REL_TOL: f64 = 1e-6;
const ORACLE_REL_TOL: f64 = 1e-5;
const ORACLE_POINTS: usize = 100;
const PROBE_SAMPLES: usize = 100;
const PROBE_SPREAD: f64 = 50.0;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 commutation of weak operators with projection", commutation),
        ("2 uniqueness of the discrete solution", uniqueness),
        ("3 crisscross k=2 orders", crisscross_k2),
        ("4 crisscross k=3 orders", crisscross_k3),
        ("5 non-convex 2D orders", nonconvex_2d),
        ("6 Kuhn k=2 orders", kuhn_k2),
        ("7 Kuhn k=3 energy order", kuhn_k3),
        ("8 error-equation residuals", error_equations),
        ("9 symbolic load oracle", load_oracle),
        ("10 norm-equivalence probe", norm_probe),
    ];
    // `cargo test --test acceptance -- 3 7` runs only criteria 3 and 7
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (name, check) in criteria {
        let number = name.split(' ').next().unwrap_or_default();
        if !only.is_empty() && !only.iter().any(|o| o == number) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let out = check();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {name}: {} [{:.1}s]", out.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!out.pass);
    }
    if failed > 0 {
        println!("{failed} of {ran} criteria failed");
        std::process::exit(1);
    }
    println!("all {ran} criteria passed");
}

fn study(file: &str) -> StudyConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("studies").join(file);
    StudyConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn order(r: &ConvergenceReport, col: Column) -> f64 {
    r.final_order(col).unwrap_or(f64::NAN)
}

fn fmt_orders(r: &ConvergenceReport, col: Column) -> String {
    let v: Vec<String> = r.orders(col).iter().skip(1).map(|o| o.map_or("-".into(), |o| format!("{o:.2}"))).collect();
    v.join("/")
}

// 1. Random polynomial inputs of degree <= k on one cell per family.

fn random_poly(rng: &mut ChaCha8Rng, dim: usize, k: u32, center: Point, scale: f64) -> Expr {
    let s = [0, 1, 2].map(|i| (Expr::Var(i) - c(center[i])) * c(1.0 / scale));
    let mut out = c(0.0);
    for a in 0..=k {
        for b in 0..=k - a {
            for d in 0..=if dim == 3 { k - a - b } else { 0 } {
                let m = s[0].clone().pow(a) * s[1].clone().pow(b) * s[2].clone().pow(d);
                out = out + c(rng.gen_range(-1.0..1.0)) * m;
            }
        }
    }
    out
}

fn vector_gap(a: &[Point], b: &[Point]) -> f64 {
    let num = a.iter().zip(b).map(|(p, q)| geometry::dist(*p, *q)).fold(0.0, f64::max);
    let den = b.iter().map(|q| geometry::norm(*q)).fold(0.0, f64::max);
    num / den.max(f64::MIN_POSITIVE)
}

fn commutation() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for family in MeshFamily::ALL {
        let mesh = generate(family, 1).unwrap();
        let dim = mesh.dim();
        let cell = (0..mesh.num_cells()).find(|&c| !mesh.is_convex(c)).unwrap_or(0);
        let geo = mesh.cell_geometry(cell);
        let pts = cell_quadrature(&mesh, cell, 4).unwrap().points;
        for k in [2usize, 3] {
            let layout = SpaceLayout::new(&mesh, k).unwrap();
            let deg = default_degrees(&mesh, cell, k).unwrap();
            let ops = CellOperators::new(&mesh, &layout, cell, deg).unwrap();
            let cc = LocalWeakOperator { degree: deg.r1, basis: ops.basis.clone(), matrix: ops.curlcurl.clone() };
            let gr = LocalWeakOperator { degree: deg.r2, basis: ops.basis.clone(), matrix: ops.grad.clone() };
            let vd = layout.local_v_dofs(&mesh, cell);
            let wd = layout.local_w_dofs(&mesh, cell);
            for _ in 0..COMMUTATION_SAMPLES {
                let comps = [0, 1, 2].map(|i| {
                    if i < dim {
                        random_poly(&mut rng, dim, k as u32, geo.centroid, geo.diameter)
                    } else {
                        c(0.0)
                    }
                });
                let u = symbolic::to_vector(&comps).unwrap();
                let cu = symbolic::curl(&u);
                let ccu = symbolic::curl(&cu);
                let (uf, cf) = (|p: Point| symbolic::eval_vector(&u, p), |p: Point| symbolic::eval_vector(&cu, p));
                let qh = interpolate_v(&mesh, &layout, 0, FieldV { u: &uf, curl: &cf }).unwrap();
                let loc: Vec<f64> = vd.iter().map(|&g| qh[g]).collect();
                let got = cc.eval_many(&loc, &pts, dim);
                let want: Vec<Point> = pts.iter().map(|p| symbolic::eval_vector(&ccu, *p)).collect();
                worst = worst.max(vector_gap(&got, &want));

                let sigma = random_poly(&mut rng, dim, k as u32, geo.centroid, geo.diameter).to_polyexp().unwrap();
                let gs = symbolic::grad(&sigma);
                let qs = interpolate_w(&mesh, &layout, 0, &|p| sigma.eval(p)).unwrap();
                let loc: Vec<f64> = wd.iter().map(|&g| qs[g]).collect();
                let got = gr.eval_many(&loc, &pts, dim);
                let want: Vec<Point> = pts.iter().map(|p| symbolic::eval_vector(&gs, *p)).collect();
                worst = worst.max(vector_gap(&got, &want));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        worst <= COMMUTATION_TOL && secs < COMMUTATION_SECONDS,
        format!(
            "{} inputs x 4 families x k=2,3, worst relative error {worst:.2e} (<= {COMMUTATION_TOL:e}), {secs:.1}s (< {COMMUTATION_SECONDS}s)",
            COMMUTATION_SAMPLES
        ),
    )
}

// 2. Zero data gives the zero solution, and K has full rank.

fn uniqueness() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (family, level) in [(MeshFamily::CrisscrossTri2d, 2u32), (MeshFamily::KuhnTet3d, 1)] {
        let zero = ManufacturedSolution::zero(family.dim());
        let opts = AssemblyOptions { k: 2, ..Default::default() };
        let out = run_level(family, level, &zero, &opts, &SolverOptions::default()).unwrap();
        let nu = out.u_h.iter().map(|v| v * v).sum::<f64>().sqrt();
        let np = out.p_h.iter().map(|v| v * v).sum::<f64>().sqrt();

        let (a, b, cm) = (out.system.dense_block(Block::A), out.system.dense_block(Block::B), out.system.dense_block(Block::C));
        let (nv, nw) = (a.nrows(), cm.nrows());
        let k = faer::Mat::<f64>::from_fn(nv + nw, nv + nw, |i, j| match (i < nv, j < nv) {
            (true, true) => a[(i, j)],
            (true, false) => b[(j - nv, i)],
            (false, true) => b[(i - nv, j)],
            (false, false) => -cm[(i - nv, j - nv)],
        });
        // equilibrate so the h^4-weighted block does not masquerade as a
        // near-null space, then apply the usual numerical-rank tolerance
        let d: Vec<f64> = (0..nv + nw).map(|i| 1.0 / k[(i, i)].abs().sqrt().max(f64::MIN_POSITIVE)).collect();
        let ks = faer::Mat::<f64>::from_fn(nv + nw, nv + nw, |i, j| d[i] * k[(i, j)] * d[j]);
        let s = ks.singular_values().unwrap();
        let cond_inv = s[s.len() - 1] / s[0];
        let rank_floor = (nv + nw) as f64 * f64::EPSILON;
        let ok = nu <= UNIQUENESS_TOL && np <= UNIQUENESS_TOL && cond_inv > rank_floor;
        pass &= ok;
        detail.push(format!(
            "{family} level {level}: |u_h| = {nu:.1e}, |p_h| = {np:.1e}, smin/smax = {cond_inv:.1e} (> {rank_floor:.1e})"
        ));
    }
    Outcome::new(pass, detail.join("; "))
}

// 3-7. Convergence studies.

fn crisscross_k2() -> Outcome {
    let mut cfg = study("crisscross_k2.json");
    cfg.levels = LevelRange::new(4, 7).unwrap();
    cfg.max_dofs = None;
    let r = run_study(&cfg).unwrap();
    let (e, l2, p) = (order(&r, Column::Energy), order(&r, Column::L2U), order(&r, Column::L2P));
    Outcome::new(
        e >= 0.9 && l2 >= 1.8 && p >= 2.5,
        format!(
            "levels 4-7: energy {e:.2} (>= 0.9, orders {}), L2(u) {l2:.2} (>= 1.8, orders {}), L2(p) {p:.2} (>= 2.5, orders {})",
            fmt_orders(&r, Column::Energy),
            fmt_orders(&r, Column::L2U),
            fmt_orders(&r, Column::L2P)
        ),
    )
}

fn crisscross_k3() -> Outcome {
    let mut cfg = study("crisscross_k3.json");
    cfg.levels = LevelRange::new(3, 5).unwrap();
    let r = run_study(&cfg).unwrap();
    let (e, l2) = (order(&r, Column::Energy), order(&r, Column::L2U));
    Outcome::new(
        (e - 2.0).abs() <= 0.3 && l2 >= 3.7,
        format!(
            "levels 3-5: energy {e:.2} (2.0 +- 0.3, orders {}), L2(u) {l2:.2} (>= 3.7, orders {})",
            fmt_orders(&r, Column::Energy),
            fmt_orders(&r, Column::L2U)
        ),
    )
}

fn nonconvex_2d() -> Outcome {
    let r2 = run_study(&study("nonconvex2d_k2.json")).unwrap();
    let r3 = run_study(&study("nonconvex2d_k3.json")).unwrap();
    let (e2, e3) = (order(&r2, Column::Energy), order(&r3, Column::Energy));
    Outcome::new(
        e2 >= 0.8 && e3 >= 1.8,
        format!(
            "levels 1-5: k=2 energy {e2:.2} (>= 0.8, orders {}), k=3 energy {e3:.2} (>= 1.8, orders {})",
            fmt_orders(&r2, Column::Energy),
            fmt_orders(&r3, Column::Energy)
        ),
    )
}

fn kuhn_k2() -> Outcome {
    let mut cfg = study("kuhn_k2.json");
    // level 4 is attempted first; the cap decides whether it is part of the study
    let exact = ManufacturedSolution::by_name(&cfg.solution).unwrap();
    let probe = assemble_only(&cfg, 4, &exact);
    let last = match probe {
        Err(Error::DofCapExceeded { .. }) => 3,
        Err(e) => return Outcome::new(false, format!("level 4: {e}")),
        Ok(()) => 4,
    };
    cfg.levels = LevelRange::new(1, last).unwrap();
    let r = run_study(&cfg).unwrap();
    let (e, l2) = (order(&r, Column::Energy), order(&r, Column::L2U));
    let direct = e >= 0.9 && l2 >= 2.0;
    let near_reference = last == 3 && (e - 1.44).abs() <= 0.5 && (l2 - 2.50).abs() <= 0.5;
    Outcome::new(
        direct || near_reference,
        format!(
            "levels 1-{last}{}: energy {e:.2} (>= 0.9, orders {}), L2(u) {l2:.2} (>= 2.0, orders {}); within 0.5 of (1.44, 2.50): {near_reference}",
            if last == 3 { " (level 4 above the unknown cap)" } else { "" },
            fmt_orders(&r, Column::Energy),
            fmt_orders(&r, Column::L2U)
        ),
    )
}

fn assemble_only(cfg: &StudyConfig, level: usize, exact: &ManufacturedSolution) -> Result<(), Error> {
    let mesh = generate(cfg.family, level)?;
    exact.with_problem(|p, _| assemble(&mesh, &p, &cfg.assembly_options())).map(|_| ())
}

fn kuhn_k3() -> Outcome {
    let r = run_study(&study("kuhn_k3.json")).unwrap();
    let e = order(&r, Column::Energy);
    let level = if e >= 2.7 { "full reproduction" } else if e >= 2.0 { "accepted" } else { "below 2" };
    Outcome::new(e >= 2.0, format!("levels 1-3: energy {e:.2} (>= 2, flag >= 2.7: {level}, orders {})", fmt_orders(&r, Column::Energy)))
}

// 8. Error equations on level 1 for both manufactured solutions.

fn error_equations() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for family in MeshFamily::ALL {
        let exact = ManufacturedSolution::by_name(if family.dim() == 2 { "e1-2d" } else { "e3-3d" }).unwrap();
        let opts = AssemblyOptions { k: 2, ..Default::default() };
        let out = run_level(family, 1, &exact, &opts, &SolverOptions::default()).unwrap();
        let mesh = generate(family, 1).unwrap();
        let r = error_equation_residual(&mesh, &opts, &exact, &out.u_h, &out.p_h).unwrap();
        let rel = r.res_v.max(r.res_w) / r.load_norm;
        pass &= rel <= RESIDUAL_REL_TOL;
        detail.push(format!("{family} {}: {rel:.1e}", exact.name()));
    }
    Outcome::new(pass, format!("max residual / load norm (<= {RESIDUAL_REL_TOL:e}) {}", detail.join(", ")))
}

// 9. Closed-form load against nested finite differences.

type Field = Box<dyn Fn(Point) -> Point>;

/// Fourth-order central-difference curl of `f`.
fn fd_curl(f: Field, h: f64) -> Field {
    Box::new(move |p: Point| {
        let mut jac = [[0.0; 3]; 3];
        for (d, col) in jac.iter_mut().enumerate() {
            let at = |s: f64| {
                let mut q = p;
                q[d] += s * h;
                f(q)
            };
            let (m2, m1, p1, p2) = (at(-2.0), at(-1.0), at(1.0), at(2.0));
            for i in 0..3 {
                col[i] = (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * h);
            }
        }
        // jac[d][i] = d f_i / d x_d
        [jac[1][2] - jac[2][1], jac[2][0] - jac[0][2], jac[0][1] - jac[1][0]]
    })
}

fn load_oracle() -> Outcome {
    let e3 = ManufacturedSolution::e3_3d();
    let expected: VectorExpr = symbolic::to_vector(&[y().exp(), z().exp(), x().exp()]).unwrap();
    let exact_expr = e3.load_expr() == &expected;

    let u: Field = Box::new(|p: Point| [p[1].exp(), p[2].exp(), p[0].exp()]);
    let h = 0.02;
    let c4 = fd_curl(fd_curl(fd_curl(fd_curl(u, h), h), h), h);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..ORACLE_POINTS {
        let p = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let f = e3.f(p);
        worst = worst.max(geometry::dist(c4(p), f) / geometry::norm(f));
    }
    Outcome::new(
        exact_expr && worst <= ORACLE_REL_TOL,
        format!(
            "load expression equals (e^y, e^z, e^x): {exact_expr}; finite-difference curl^4 at {ORACLE_POINTS} points, worst relative gap {worst:.1e} (<= {ORACLE_REL_TOL:e})"
        ),
    )
}

// 10. Norm-equivalence constants stay level independent.

fn norm_probe() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for family in [MeshFamily::CrisscrossTri2d, MeshFamily::NonconvexPoly2d] {
        let opts = AssemblyOptions { k: 2, ..Default::default() };
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        let mut per_level = Vec::new();
        for level in 1..=3 {
            let mesh: PolytopalMesh = generate(family, level).unwrap();
            let r = norm_equivalence_probe(&mesh, &opts, PROBE_SAMPLES, level as u64).unwrap();
            lo = lo.min(r.min);
            hi = hi.max(r.max);
            per_level.push(format!("[{:.3}, {:.3}]", r.min, r.max));
        }
        let spread = hi / lo;
        pass &= spread <= PROBE_SPREAD;
        detail.push(format!("{family} {} spread {spread:.2}", per_level.join(" ")));
    }
    Outcome::new(pass, format!("{} (<= {PROBE_SPREAD})", detail.join("; ")))
}
