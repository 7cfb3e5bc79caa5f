//! Electrochemical cell compensation.
//!
//! A compensated signal is a temperature baseline plus a temperature-dependent
//! gain applied to the working-electrode voltage minus a scaled auxiliary
//! electrode voltage, both taken relative to their factory zeros:
//!
//! ```text
//! s = k0 + k1 (T - T0) + gain(T) * ((WE - WE0) - n(T) * (AE - AE0))
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear table over an ascending temperature grid, clamped at the
/// ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TempLookup {
    temps: Vec<f64>,
    values: Vec<f64>,
}

impl TempLookup {
    pub fn new(temps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if temps.is_empty() || temps.len() != values.len() {
            return Err(Error::config("lookup needs equally many (>= 1) temperatures and values"));
        }
        if temps.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config("lookup temperature grid must be strictly ascending"));
        }
        Ok(Self { temps, values })
    }

    pub fn temps(&self) -> &[f64] {
        &self.temps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interpolated value and whether `t` fell outside the grid.
    pub fn eval(&self, t: f64) -> (f64, bool) {
        let (first, last) = (self.temps[0], *self.temps.last().unwrap());
        if t <= first {
            return (self.values[0], t < first);
        }
        if t >= last {
            return (*self.values.last().unwrap(), t > last);
        }
        let i = self.temps.partition_point(|&g| g <= t) - 1;
        let (t0, t1) = (self.temps[i], self.temps[i + 1]);
        let w = (t - t0) / (t1 - t0);
        (self.values[i] + w * (self.values[i + 1] - self.values[i]), false)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { temps: self.temps.clone(), values: self.values.iter().map(|v| v * factor).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcChannelModel {
    /// Baseline offset, signal units.
    pub kappa0: f64,
    /// Baseline temperature coefficient, signal units per degC.
    pub kappa1: f64,
    /// Reference temperature, degC.
    pub t0: f64,
    /// Signal units per volt.
    pub gain: TempLookup,
    pub aux_factor: TempLookup,
    pub we0: f64,
    pub ae0: f64,
}

impl EcChannelModel {
    /// Representative tables over 10-40 degC: gain falls and the auxiliary
    /// factor rises with temperature.
    pub fn representative(sensitivity: f64) -> Self {
        let grid = vec![10.0, 20.0, 30.0, 40.0];
        Self {
            kappa0: 0.0,
            kappa1: 0.0,
            t0: 20.0,
            gain: TempLookup::new(grid.clone(), vec![1.08, 1.0, 0.93, 0.87]).unwrap().scaled(sensitivity),
            aux_factor: TempLookup::new(grid, vec![0.8, 1.0, 1.25, 1.6]).unwrap(),
            we0: 0.25,
            ae0: 0.25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // The supported operating range must have a strictly positive gain.
        let mut t = 15.0;
        while t <= 35.0 {
            if !(self.gain.eval(t).0 > 0.0) {
                return Err(Error::config(format!("EC gain must be positive over 15-35 degC (fails at {t})")));
            }
            t += 0.5;
        }
        Ok(())
    }

    /// Signal for one sample.
    pub fn compensate_one(&self, we: f64, ae: f64, temp: f64) -> (f64, bool) {
        let (gain, c1) = self.gain.eval(temp);
        let (n, c2) = self.aux_factor.eval(temp);
        let s = self.kappa0 + self.kappa1 * (temp - self.t0) + gain * ((we - self.we0) - n * (ae - self.ae0));
        (s, c1 || c2)
    }

    /// Working-electrode voltage that compensates to `signal` given `ae`.
    pub fn working_voltage_for(&self, signal: f64, ae: f64, temp: f64) -> f64 {
        let gain = self.gain.eval(temp).0;
        let n = self.aux_factor.eval(temp).0;
        self.we0 + (signal - self.kappa0 - self.kappa1 * (temp - self.t0)) / gain + n * (ae - self.ae0)
    }
}

/// Applies the compensation model sample by sample. Temperatures outside the
/// lookup grid are clamped to its edge values with a logged warning.
pub fn ec_compensate(we: &[f64], ae: &[f64], temp: &[f64], model: &EcChannelModel) -> Result<Vec<f64>> {
    if we.len() != ae.len() || we.len() != temp.len() {
        return Err(Error::contract(format!(
            "ec_compensate length mismatch: WE {}, AE {}, T {}",
            we.len(),
            ae.len(),
            temp.len()
        )));
    }
    let mut clamped = 0usize;
    let out = we
        .iter()
        .zip(ae)
        .zip(temp)
        .map(|((&w, &a), &t)| {
            let (s, c) = model.compensate_one(w, a, t);
            clamped += usize::from(c);
            s
        })
        .collect();
    if clamped > 0 {
        log::warn!("ec_compensate: {clamped} samples outside the lookup temperature grid were clamped");
    }
    Ok(out)
}
