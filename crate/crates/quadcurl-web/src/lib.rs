//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Everything crosses the boundary as JSON strings so the page needs no
//! generated type glue beyond `wasm-bindgen` itself.

use quadcurl::analysis::{Column, ConvergenceReport};
use quadcurl::polymesh::{generate, MeshFamily};
use quadcurl::study::{run_study, LevelRange, OutputFormat, StudyConfig};
use quadcurl::weakops::{default_degrees, DegreeMode};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest level the page may request; keeps a study within a few seconds.
pub const MAX_LEVEL: u32 = 4;

#[derive(Serialize)]
struct CellView {
    polygon: Vec<[f64; 2]>,
    convex: bool,
    r1: usize,
    r2: usize,
}

#[derive(Serialize)]
struct MeshView {
    family: String,
    level: usize,
    h: f64,
    cells: Vec<CellView>,
}

#[derive(Serialize)]
struct StudyView {
    table: String,
    levels: Vec<u32>,
    h: Vec<f64>,
    energy: Vec<f64>,
    l2_u: Vec<f64>,
    l2_p: Vec<f64>,
    energy_order: Option<f64>,
}

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn planar_family(name: &str) -> Result<MeshFamily, JsError> {
    let family: MeshFamily = name.parse().map_err(js_err)?;
    if family.dim() != 2 {
        return Err(JsError::new("the demo draws planar families only"));
    }
    Ok(family)
}

/// Cell polygons of a planar mesh with the weak-operator degrees chosen on
/// each cell for degree `k`.
#[wasm_bindgen]
pub fn mesh_json(family: &str, level: usize, k: usize) -> Result<String, JsError> {
    let family = planar_family(family)?;
    let mesh = generate(family, level).map_err(js_err)?;
    let cells = (0..mesh.num_cells())
        .map(|c| {
            let d = default_degrees(&mesh, c, k)?;
            let polygon = mesh.cell_polygon(c)?.into_iter().map(|v| {
                let p = mesh.vertex(v);
                [p[0], p[1]]
            });
            Ok(CellView { polygon: polygon.collect(), convex: mesh.is_convex(c), r1: d.r1, r2: d.r2 })
        })
        .collect::<quadcurl::Result<Vec<_>>>()
        .map_err(js_err)?;
    let view = MeshView { family: family.name().into(), level, h: mesh.h(), cells };
    serde_json::to_string(&view).map_err(js_err)
}

/// Convergence study for the planar manufactured solution on levels
/// `1..=last`.
#[wasm_bindgen]
pub fn study_json(family: &str, last: u32, k: usize) -> Result<String, JsError> {
    let family = planar_family(family)?;
    if last > MAX_LEVEL {
        return Err(JsError::new(&format!("levels above {MAX_LEVEL} are too slow for the browser")));
    }
    let config = StudyConfig {
        family,
        levels: LevelRange::new(1, last).map_err(js_err)?,
        k,
        degree_mode: DegreeMode::Auto,
        solution: "e1-2d".into(),
        solver_tol: 1e-10,
        quadrature_exactness_boost: 2,
        output: OutputFormat::Table,
        output_dir: None,
        dump_system: false,
        max_dofs: Some(50_000),
    };
    let report = run_study(&config).map_err(js_err)?;
    serde_json::to_string(&study_view(&report)).map_err(js_err)
}

fn study_view(report: &ConvergenceReport) -> StudyView {
    let col = |f: fn(&quadcurl::analysis::ErrorRecord) -> f64| report.records.iter().map(f).collect();
    StudyView {
        table: report.table(),
        levels: report.records.iter().map(|r| r.level).collect(),
        h: col(|r| r.h),
        energy: col(|r| r.energy),
        l2_u: col(|r| r.l2_u),
        l2_p: col(|r| r.l2_p),
        energy_order: report.final_order(Column::Energy),
    }
}

/// `(r1, r2)` for a cell with `faces` faces.
#[wasm_bindgen]
pub fn degrees_json(faces: usize, k: usize, convex: bool) -> Result<String, JsError> {
    let d = quadcurl::weakops::recipe(faces, k, convex).map_err(js_err)?;
    serde_json::to_string(&[d.r1, d.r2]).map_err(js_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_view_lists_every_cell() {
        let text = mesh_json("crisscross-tri-2d", 2, 2).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let cells = v["cells"].as_array().unwrap();
        assert_eq!(cells.len(), 16);
        assert_eq!(cells[0]["polygon"].as_array().unwrap().len(), 3);
        assert_eq!(cells[0]["r2"], 4);
    }

    #[test]
    fn small_study_reports_orders() {
        let text = study_json("crisscross-tri-2d", 2, 2).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["levels"], serde_json::json!([1, 2]));
        assert!(v["table"].as_str().unwrap().contains("|||u-uh|||"));
    }

    #[test]
    fn degree_recipe() {
        assert_eq!(degrees_json(6, 2, false).unwrap(), "[12,13]");
        assert_eq!(degrees_json(3, 2, true).unwrap(), "[6,4]");
    }
}
