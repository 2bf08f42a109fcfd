use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ExperimentId};
use crate::operator::GaussianWellSpec;
use crate::{Error, Result};

const DEPTH: f64 = -10.0;
const SIGMA: f64 = 0.2;

/// Well centers of the linear test problems on `(0, 2 pi)^dim`.
pub fn wells(dim: usize) -> GaussianWellSpec {
    let centers: Vec<Vec<f64>> = match dim {
        1 => vec![vec![1.0367], vec![2.4504], vec![3.8642], vec![5.2779]],
        // no symmetry relates the wells, so the 16th and 17th states are
        // not forced to be degenerate
        2 => vec![
            vec![1.0367, 1.5],
            vec![2.4504, 4.9],
            vec![3.8642, 2.3],
            vec![5.2779, 4.1],
        ],
        _ => vec![
            vec![1.0367, 1.5, 2.0],
            vec![2.4504, 4.9, 1.2],
            vec![3.8642, 2.3, 4.7],
            vec![5.2779, 4.1, 3.1],
        ],
    };
    GaussianWellSpec::uniform(centers, DEPTH, SIGMA)
}

/// Fully resolved sizes of a linear experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub lengths: Vec<f64>,
    pub grid_points: usize,
    pub reference_points: usize,
    pub elements: usize,
    pub lgl_points: usize,
    pub n: usize,
    pub b_plus_offset: f64,
    pub kinetic: f64,
    pub wells: GaussianWellSpec,
}

impl Setup {
    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn resolve(cfg: &ExperimentConfig) -> Result<Self> {
        // (dim, grid, reference, elements, lgl, offset)
        let (dim, grid, reference, elements, lgl, offset) = match cfg.experiment {
            ExperimentId::Lin1d => (1, 140, 500, 7, 40, 1.0),
            ExperimentId::Lin2d | ExperimentId::Weak2d => (2, 140, 300, 7, 40, 0.1),
            ExperimentId::Lin3d => (3, 40, 72, 4, 30, 0.01),
            ExperimentId::Scf1d => return Err(Error::Config("scf1d has no linear setup".into())),
        };
        let rep = cfg.rep;
        let base = wells(dim);
        let lengths = vec![2.0 * PI * rep as f64; dim];
        let setup = Self {
            wells: if rep > 1 {
                base.repeated(&vec![2.0 * PI; dim], rep)
            } else {
                base
            },
            lengths,
            grid_points: cfg.grid_points.unwrap_or(grid * rep),
            reference_points: cfg.reference_points.unwrap_or(reference * rep),
            elements: cfg.elements.unwrap_or(elements * rep),
            lgl_points: cfg.lgl_points.unwrap_or(lgl),
            n: cfg.n.unwrap_or(16 * rep.pow(dim as u32)),
            b_plus_offset: cfg.b_plus_offset.unwrap_or(offset),
            kinetic: 1.0,
        };
        setup.wells.validate(&setup.lengths)?;
        if !setup.grid_points.is_multiple_of(setup.elements) {
            return Err(Error::Config(format!(
                "{} grid points do not split evenly into {} elements",
                setup.grid_points, setup.elements
            )));
        }
        Ok(setup)
    }
}
