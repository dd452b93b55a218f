//! Browser bindings for the demo page in `www/`.
//!
//! Each export is a thin wrapper over a plain Rust function so the logic can
//! be tested natively; the wrappers only convert errors to `JsError`.

use binned_ssa::bench::{measure_counters, random_unit_rate_network, BenchSpec, RateProfile};
use binned_ssa::spatial::elf_ehrenberg_model;
use binned_ssa::{parse_model, run, BinPolicy, Method, OutputMode, RunConfig, SimModel};
use wasm_bindgen::prelude::*;

/// Sampled trajectory: `values` is row-major, one row per time point.
#[wasm_bindgen]
#[derive(Debug)]
pub struct TrajectoryView {
    species: Vec<String>,
    times: Vec<f64>,
    values: Vec<f64>,
    steps: u64,
}

#[wasm_bindgen]
impl TrajectoryView {
    #[wasm_bindgen(getter)]
    pub fn species(&self) -> Vec<String> {
        self.species.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn steps(&self) -> f64 {
        self.steps as f64
    }
}

/// One `z` layer of a spatial run: `a` and `b` are `side × side` row-major.
#[wasm_bindgen]
#[derive(Debug)]
pub struct SliceView {
    side: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    steps: u64,
}

#[wasm_bindgen]
impl SliceView {
    #[wasm_bindgen(getter)]
    pub fn side(&self) -> usize {
        self.side
    }

    #[wasm_bindgen(getter)]
    pub fn a(&self) -> Vec<f64> {
        self.a.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn b(&self) -> Vec<f64> {
        self.b.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn steps(&self) -> f64 {
        self.steps as f64
    }
}

fn method(id: &str) -> Result<Method, String> {
    id.parse::<Method>().map_err(|e| e.to_string())
}

pub fn simulate_text(model: &str, method_id: &str, t_final: f64, dt: f64, seed: u64) -> Result<TrajectoryView, String> {
    let file = parse_model(model).map_err(|e| e.to_string())?;
    let species = file.network.species().to_vec();
    let sim = SimModel::new(file.network, file.initial);
    let config = RunConfig {
        max_steps: 20_000_000,
        ..RunConfig::new(method(method_id)?, t_final, seed).with_output(OutputMode::Interval(dt))
    };
    let (traj, _) = run(&sim, &config).map_err(|e| e.to_string())?;
    let values = traj.populations.iter().flatten().map(|&n| n as f64).collect();
    Ok(TrajectoryView { species, times: traj.times, values, steps: traj.steps })
}

/// Measured `[bins, entries]` per selection for each width, interleaved.
pub fn search_depth(channels: usize, widths: &[f64], steps: u64, seed: u64) -> Result<Vec<f64>, String> {
    if channels < 2 || steps < 1_000 {
        return Err("need M ≥ 2 and at least 1000 steps".into());
    }
    let network = random_unit_rate_network(channels, 1, seed)
        .map_err(|e| e.to_string())?
        .with_rates(RateProfile::Normalized.rates(channels));
    let mut out = Vec::with_capacity(2 * widths.len());
    for &w in widths {
        if !(w > 0.0) {
            return Err(format!("bin width {w} must be positive"));
        }
        let spec = BenchSpec {
            out_degree: 1,
            seed,
            repetitions: 1,
            profile: RateProfile::Normalized,
            bin_policy: BinPolicy::fixed_width(w),
            ..BenchSpec::new(Method::NrmBins, channels, steps)
        };
        let (c, _) = measure_counters(&spec, &network).map_err(|e| e.to_string())?;
        out.push(c.per_selection(c.bins_scanned));
        out.push(c.per_selection(c.entries_scanned));
    }
    Ok(out)
}

pub fn rdme_slice(domain: f64, subvolume: f64, t_final: f64, method_id: &str, seed: u64) -> Result<SliceView, String> {
    let (model, initial) = elf_ehrenberg_model(domain, subvolume, seed).map_err(|e| e.to_string())?;
    let (nx, ny, nz) = model.mesh.dims;
    if nx * ny * nz > 27_000 {
        return Err("mesh too large for the browser demo (limit 30³)".into());
    }
    let sim = SimModel::spatial(&model, initial);
    let (traj, _) = run(&sim, &RunConfig::new(method(method_id)?, t_final, seed)).map_err(|e| e.to_string())?;
    let z = nz / 2;
    let (mut a, mut b) = (Vec::with_capacity(nx * ny), Vec::with_capacity(nx * ny));
    for y in 0..ny {
        for x in 0..nx {
            let v = model.mesh.index(x, y, z);
            a.push(traj.final_state[model.species_index(v, 2)] as f64);
            b.push(traj.final_state[model.species_index(v, 3)] as f64);
        }
    }
    Ok(SliceView { side: nx, a, b, steps: traj.steps })
}

#[wasm_bindgen]
pub fn simulate_model(model: &str, method: &str, t_final: f64, dt: f64, seed: u32) -> Result<TrajectoryView, JsError> {
    simulate_text(model, method, t_final, dt, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn search_depth_curve(channels: usize, widths: Vec<f64>, steps: u32, seed: u32) -> Result<Vec<f64>, JsError> {
    search_depth(channels, &widths, steps as u64, seed as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn spatial_slice(domain: f64, subvolume: f64, t_final: f64, method: &str, seed: u32) -> Result<SliceView, JsError> {
    rdme_slice(domain, subvolume, t_final, method, seed as u64).map_err(|e| JsError::new(&e))
}
