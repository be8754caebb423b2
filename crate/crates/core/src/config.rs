//! Experiment configuration: a flat TOML file with one table per module,
//! figure presets, and `section.key=value` overrides.

use serde::{Deserialize, Serialize};

use crate::bounds::{Combiner, SystemParams};
use crate::correlation::SpacingPolicy;
use crate::error::{Error, Result};
use crate::geometry::{CellLayout, MomentSpec, PlacementMode};
use crate::sweep::{Axis, OperatingPoint, SweepGrid, CANDIDATE_N};

/// Preset identifiers accepted by [`ExperimentConfig::preset`].
pub const PRESETS: [&str; 11] =
    ["fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12", "fig13", "fig14"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub m: u32,
    pub n: u32,
    pub k: u32,
    pub t: u32,
    pub omega: u32,
    pub snr_db: f64,
    pub combiners: Vec<Combiner>,
    pub candidate_n: Vec<u32>,
    /// Override for the pilot-contamination heuristic weight.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Include the variance term of the location-averaged interference.
    pub include_variance: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    Uniform,
    Ring,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub cell_radius_m: f64,
    pub min_distance_m: f64,
    pub path_loss_exponent: f64,
    pub placement: Placement,
    pub ring_radius_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationSection {
    pub wavelength_mm: f64,
    pub device_size_mm: f64,
    pub spacing: SpacingPolicy,
    pub grid_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    pub seed: u64,
    pub moment_samples: u64,
    pub draws: u64,
    pub min_draws: u64,
    pub mi_samples: u64,
    pub detection_trials: u64,
    /// Placements averaged by the random-location tightness check.
    pub placements: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_axis: Option<Axis>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series_values: Vec<f64>,
    /// A second, independent sweep run next to the first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paired_axis: Option<Axis>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub paired_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub cache_dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSection,
    pub geometry: GeometrySection,
    pub correlation: CorrelationSection,
    pub montecarlo: MonteCarloSection,
    #[serde(default)]
    pub sweep: SweepSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            system: SystemSection {
                m: 512,
                n: 2,
                k: 10,
                t: 1000,
                omega: 3,
                snr_db: 10.0,
                combiners: Combiner::ALL.to_vec(),
                candidate_n: CANDIDATE_N.to_vec(),
                theta: None,
                include_variance: false,
            },
            geometry: GeometrySection {
                cell_radius_m: 500.0,
                min_distance_m: 50.0,
                path_loss_exponent: 3.7,
                placement: Placement::Uniform,
                ring_radius_m: 275.0,
            },
            correlation: CorrelationSection {
                wavelength_mm: 60.0,
                device_size_mm: 100.0,
                spacing: SpacingPolicy::MaxSpread,
                grid_points: 10_000,
            },
            montecarlo: MonteCarloSection {
                seed: 1,
                moment_samples: 50_000,
                draws: 10_000,
                min_draws: 1_000,
                mi_samples: 100_000,
                detection_trials: 1_000_000,
                placements: 20,
            },
            sweep: SweepSection::default(),
            output: OutputSection { dir: "out".into(), cache_dir: "out/cache".into() },
        }
    }
}

fn range(start: u32, end: u32, step: u32) -> Vec<f64> {
    (start..=end).step_by(step as usize).map(f64::from).collect()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().trim().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Resolved configuration for one figure of the study.
    ///
    /// | id | content |
    /// |----|---------|
    /// | fig4 | bound vs simulation, UEs on a 275 m ring, M and K |
    /// | fig5 | bound vs simulation, uniform UEs, M and K |
    /// | fig6 | ZF rate per N over M, omega = 1, D_m = 1 m |
    /// | fig7 | as fig6 with omega = 3 |
    /// | fig8 | N* over K for omega in {1, 3}, D_m = 1 m |
    /// | fig9 | N* over T, paired with N* over D_m, omega in {1, 3} |
    /// | fig10 | N-optimised cell rate over M, omega in {1, 3}, D_m = 1 m |
    /// | fig11 | N-optimised cell rate over K |
    /// | fig12 | N-optimised per-UE rate over K |
    /// | fig13 | N-optimised cell rate over T |
    /// | fig14 | N-optimised cell rate over D_m |
    pub fn preset(id: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        let omegas = vec![1.0, 3.0];
        let m_grid = range(10, 1000, 10);
        let k_grid = range(1, 50, 1);
        let t_grid = vec![50.0, 100.0, 200.0, 300.0, 500.0, 700.0, 1000.0, 1500.0, 2000.0];
        let dm_grid = vec![10.0, 20.0, 30.0, 50.0, 70.0, 100.0, 200.0, 300.0, 500.0, 700.0, 1000.0];
        let s = &mut c.sweep;
        match id {
            "fig4" | "fig5" => {
                c.geometry.placement = if id == "fig4" { Placement::Ring } else { Placement::Uniform };
                s.axis = Some(Axis::M);
                s.values = vec![64.0, 128.0, 256.0, 512.0, 1024.0];
                s.series_axis = Some(Axis::K);
                s.series_values = vec![10.0, 20.0];
            }
            "fig6" | "fig7" => {
                c.system.omega = if id == "fig6" { 1 } else { 3 };
                c.system.combiners = vec![Combiner::Zf];
                c.correlation.device_size_mm = 1000.0;
                s.axis = Some(Axis::M);
                s.values = m_grid;
            }
            "fig8" => {
                c.correlation.device_size_mm = 1000.0;
                s.axis = Some(Axis::K);
                s.values = k_grid;
                s.series_axis = Some(Axis::Omega);
                s.series_values = omegas;
            }
            "fig9" => {
                s.axis = Some(Axis::T);
                s.values = t_grid;
                s.series_axis = Some(Axis::Omega);
                s.series_values = omegas;
                s.paired_axis = Some(Axis::DeviceSize);
                s.paired_values = dm_grid;
            }
            "fig10" | "fig11" | "fig12" | "fig13" => {
                c.correlation.device_size_mm = 1000.0;
                let (axis, values) = match id {
                    "fig10" => (Axis::M, m_grid),
                    "fig13" => (Axis::T, t_grid),
                    _ => (Axis::K, k_grid),
                };
                s.axis = Some(axis);
                s.values = values;
                s.series_axis = Some(Axis::Omega);
                s.series_values = omegas;
            }
            "fig14" => {
                s.axis = Some(Axis::DeviceSize);
                s.values = dm_grid;
                s.series_axis = Some(Axis::Omega);
                s.series_values = omegas;
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown preset `{other}`; expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        }
        Ok(c)
    }

    /// Applies `section.key=value`. The value is read as a TOML literal and
    /// falls back to a bare string, so `geometry.placement=ring` works.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form section.key=value")))?;
        let (section, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| Error::Config(format!("override key `{path}` must be section.key")))?;
        let raw = raw.trim();
        let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
            Ok(mut t) => t.remove("v").expect("parsed key"),
            Err(_) => toml::Value::String(raw.to_string()),
        };
        let mut doc = toml::Table::try_from(&*self).expect("config serializes");
        let table = doc
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{section}` is not a section")))?;
        table.insert(key.to_string(), value);
        *self = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("override `{assignment}`: {}", e.message().trim())))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if !(g.min_distance_m > 0.0 && g.min_distance_m < g.cell_radius_m) {
            return Err(Error::Config(format!(
                "geometry.min_distance_m must lie in (0, cell_radius_m), got {}",
                g.min_distance_m
            )));
        }
        if g.placement == Placement::Ring && !(g.ring_radius_m >= g.min_distance_m && g.ring_radius_m < g.cell_radius_m) {
            return Err(Error::Config(format!(
                "geometry.ring_radius_m must lie in [min_distance_m, cell_radius_m), got {}",
                g.ring_radius_m
            )));
        }
        if self.system.combiners.is_empty() {
            return Err(Error::Config("system.combiners is empty".into()));
        }
        if self.montecarlo.draws < self.montecarlo.min_draws {
            return Err(Error::Config(format!(
                "montecarlo.draws = {} is below montecarlo.min_draws = {}",
                self.montecarlo.draws, self.montecarlo.min_draws
            )));
        }
        if self.sweep.axis.is_some() && self.sweep.values.is_empty() {
            return Err(Error::Config("sweep.values is empty".into()));
        }
        if self.sweep.series_axis.is_some() != !self.sweep.series_values.is_empty() {
            return Err(Error::Config("sweep.series_axis and sweep.series_values go together".into()));
        }
        if self.sweep.paired_axis.is_some() != !self.sweep.paired_values.is_empty() {
            return Err(Error::Config("sweep.paired_axis and sweep.paired_values go together".into()));
        }
        CellLayout::hexagonal(g.cell_radius_m, self.system.omega)?;
        Ok(())
    }

    pub fn params(&self, combiner: Combiner) -> SystemParams {
        self.operating_point().params(self.system.n, combiner)
    }

    pub fn operating_point(&self) -> OperatingPoint {
        OperatingPoint {
            m: self.system.m,
            n: self.system.n,
            k: self.system.k,
            t: self.system.t,
            omega: self.system.omega,
            snr_db: self.system.snr_db,
            device_mm: self.correlation.device_size_mm,
            wavelength_mm: self.correlation.wavelength_mm,
            spacing: self.correlation.spacing,
            grid_points: self.correlation.grid_points,
            theta: self.system.theta,
            include_variance: self.system.include_variance,
        }
    }

    pub fn placement_mode(&self) -> PlacementMode {
        match self.geometry.placement {
            Placement::Ring => PlacementMode::FixedRing { radius: self.geometry.ring_radius_m },
            Placement::Uniform => PlacementMode::UniformRandom { seed: self.montecarlo.seed },
        }
    }

    pub fn moment_spec(&self) -> MomentSpec {
        MomentSpec {
            path_loss_exponent: self.geometry.path_loss_exponent,
            min_distance: self.geometry.min_distance_m,
            sample_count: self.montecarlo.moment_samples,
            seed: self.montecarlo.seed,
        }
    }

    /// The main sweep, or `None` when no axis is configured.
    pub fn sweep_grid(&self) -> Option<SweepGrid> {
        self.grid_for(self.sweep.axis?, &self.sweep.values)
    }

    /// The paired sweep, if any.
    pub fn paired_grid(&self) -> Option<SweepGrid> {
        self.grid_for(self.sweep.paired_axis?, &self.sweep.paired_values)
    }

    fn grid_for(&self, axis: Axis, values: &[f64]) -> Option<SweepGrid> {
        Some(SweepGrid {
            axis,
            values: values.to_vec(),
            series: self.sweep.series_axis.map(|a| (a, self.sweep.series_values.clone())),
            base: self.operating_point(),
            candidate_n: self.system.candidate_n.clone(),
            combiners: self.system.combiners.clone(),
        })
    }
}
