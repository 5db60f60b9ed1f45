//! Problem instance and conversions between laboratory and atomic units.
//!
//! Everything below the CLI works in atomic units (hbar = m = |e| = 1):
//! energies in hartree, lengths in bohr, times in hbar/hartree and fields in
//! hartree/(e bohr). Conversion factors are CODATA 2018.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Hartree energy in eV.
pub const HARTREE_EV: f64 = 27.211_386_245_988;
/// Bohr radius in nm.
pub const BOHR_NM: f64 = 0.052_917_721_090_3;
/// Atomic unit of time in fs.
pub const AU_TIME_FS: f64 = 0.024_188_843_265_857;
/// Atomic unit of electric field in V/nm.
pub const AU_FIELD_V_PER_NM: f64 = 514.220_674_763;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Energy,
    Field,
    Length,
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    ElectronVolt,
    Hartree,
    VoltPerNm,
    AuField,
    Nanometer,
    Bohr,
    Femtosecond,
    AuTime,
}

impl Unit {
    pub fn dimension(self) -> Dimension {
        match self {
            Unit::ElectronVolt | Unit::Hartree => Dimension::Energy,
            Unit::VoltPerNm | Unit::AuField => Dimension::Field,
            Unit::Nanometer | Unit::Bohr => Dimension::Length,
            Unit::Femtosecond | Unit::AuTime => Dimension::Time,
        }
    }

    /// Size of one of this unit expressed in the atomic unit of its dimension.
    fn in_atomic(self) -> f64 {
        match self {
            Unit::ElectronVolt => 1.0 / HARTREE_EV,
            Unit::VoltPerNm => 1.0 / AU_FIELD_V_PER_NM,
            Unit::Nanometer => 1.0 / BOHR_NM,
            Unit::Femtosecond => 1.0 / AU_TIME_FS,
            Unit::Hartree | Unit::AuField | Unit::Bohr | Unit::AuTime => 1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Unit::ElectronVolt => "eV",
            Unit::Hartree => "hartree",
            Unit::VoltPerNm => "V/nm",
            Unit::AuField => "au-field",
            Unit::Nanometer => "nm",
            Unit::Bohr => "bohr",
            Unit::Femtosecond => "fs",
            Unit::AuTime => "au-time",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unit = match s {
            "eV" => Unit::ElectronVolt,
            "hartree" => Unit::Hartree,
            "V/nm" => Unit::VoltPerNm,
            "au-field" => Unit::AuField,
            "nm" => Unit::Nanometer,
            "bohr" => Unit::Bohr,
            "fs" => Unit::Femtosecond,
            "au-time" => Unit::AuTime,
            other => return Err(Error::InvalidParameter(format!("unknown unit tag `{other}`"))),
        };
        Ok(unit)
    }
}

/// Converts `value` between two units of the same dimension.
pub fn convert(value: f64, from: Unit, to: Unit) -> Result<f64> {
    if from.dimension() != to.dimension() {
        return Err(Error::IncompatibleUnits { from, to });
    }
    if from == to {
        return Ok(value);
    }
    // Route through the atomic unit; one side is always atomic so this is a
    // single multiplication or division by the CODATA factor.
    let factor_from = from.in_atomic();
    let factor_to = to.in_atomic();
    if factor_to == 1.0 {
        Ok(value * factor_from)
    } else if factor_from == 1.0 {
        Ok(value / factor_to)
    } else {
        Ok(value * factor_from / factor_to)
    }
}

/// One problem instance in atomic units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Barrier height U (hartree).
    pub barrier: f64,
    /// Field strength E (hartree/bohr).
    pub field: f64,
    /// Incident wavevector k (1/bohr).
    pub k: f64,
    /// Fermi wavevector k_F (1/bohr).
    pub k_fermi: f64,
}

impl PhysicalParams {
    /// Validates `U > 0`, `E >= 0`, `0 < k <= k_F` and `k^2/2 <= U`.
    pub fn new(barrier: f64, field: f64, k: f64, k_fermi: f64) -> Result<Self> {
        let finite = [barrier, field, k, k_fermi].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        if barrier <= 0.0 {
            return Err(Error::InvalidParameter(format!("barrier U = {barrier} must be > 0")));
        }
        if field < 0.0 {
            return Err(Error::InvalidParameter(format!("field E = {field} must be >= 0")));
        }
        if !(k > 0.0 && k <= k_fermi) {
            return Err(Error::InvalidParameter(format!(
                "wavevector k = {k} must satisfy 0 < k <= k_F = {k_fermi}"
            )));
        }
        if 0.5 * k * k > barrier {
            return Err(Error::NotTunneling {
                energy: 0.5 * k * k,
                barrier,
            });
        }
        Ok(Self {
            barrier,
            field,
            k,
            k_fermi,
        })
    }

    /// Builds an instance from eV / V/nm inputs with the incident wave at the
    /// Fermi level.
    pub fn from_lab(barrier_ev: f64, fermi_ev: f64, field_v_per_nm: f64) -> Result<Self> {
        if fermi_ev <= 0.0 {
            return Err(Error::InvalidParameter(format!("E_F = {fermi_ev} eV must be > 0")));
        }
        let barrier = convert(barrier_ev, Unit::ElectronVolt, Unit::Hartree)?;
        let fermi = convert(fermi_ev, Unit::ElectronVolt, Unit::Hartree)?;
        let field = convert(field_v_per_nm, Unit::VoltPerNm, Unit::AuField)?;
        let k_fermi = (2.0 * fermi).sqrt();
        Self::new(barrier, field, k_fermi, k_fermi)
    }

    /// Same instance with a different incident wavevector.
    pub fn with_k(&self, k: f64) -> Result<Self> {
        Self::new(self.barrier, self.field, k, self.k_fermi)
    }

    /// Same instance with a different field.
    pub fn with_field(&self, field: f64) -> Result<Self> {
        Self::new(self.barrier, field, self.k, self.k_fermi)
    }

    /// Evanescent decay rate `sqrt(2U - k^2)` under the zero-field step.
    pub fn kappa(&self) -> f64 {
        (2.0 * self.barrier - self.k * self.k).max(0.0).sqrt()
    }

    pub fn fermi_energy(&self) -> f64 {
        0.5 * self.k_fermi * self.k_fermi
    }

    /// `k^2/2 < U` strictly.
    pub fn is_tunneling(&self) -> bool {
        0.5 * self.k * self.k < self.barrier
    }

    pub(crate) fn require_tunneling(&self) -> Result<()> {
        if self.is_tunneling() {
            Ok(())
        } else {
            Err(Error::NotTunneling {
                energy: 0.5 * self.k * self.k,
                barrier: self.barrier,
            })
        }
    }

    pub(crate) fn require_field(&self) -> Result<()> {
        if self.field > 0.0 {
            Ok(())
        } else {
            Err(Error::ZeroField)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    /// `sqrt(2U - k^2)` (1/bohr).
    pub kappa: f64,
    /// Classical exit point `(2U - k_F^2) / (2E)` (bohr); absent when E = 0.
    pub x0: Option<f64>,
    /// `k_F^2 / 2` (hartree).
    pub fermi_energy: f64,
}

pub fn derive(params: &PhysicalParams) -> DerivedQuantities {
    let x0 = (params.field > 0.0).then(|| {
        (2.0 * params.barrier - params.k_fermi * params.k_fermi) / (2.0 * params.field)
    });
    DerivedQuantities {
        kappa: params.kappa(),
        x0,
        fermi_energy: params.fermi_energy(),
    }
}
