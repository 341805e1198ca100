//! Conversion factors to Hartree atomic units (CODATA 2018).

/// Electron masses per unified atomic mass unit.
pub const AMU: f64 = 1_822.888_486_209;
/// Hartree per wavenumber.
pub const WAVENUMBER: f64 = 1.0 / 219_474.631_363_20;
/// Hartree per electronvolt.
pub const ELECTRONVOLT: f64 = 1.0 / 27.211_386_245_988;
/// Bohr per angstrom.
pub const ANGSTROM: f64 = 1.0 / 0.529_177_210_903;
/// Atomic units of dipole per debye.
pub const DEBYE: f64 = 0.393_430_269_7;
/// Seconds per atomic unit of time.
pub const TIME_SECONDS: f64 = 2.418_884_326_585_7e-17;
/// Atomic units of time per nanosecond.
pub const NANOSECOND: f64 = 1e-9 / TIME_SECONDS;
/// Atomic units of time per picosecond.
pub const PICOSECOND: f64 = 1e-12 / TIME_SECONDS;
/// Speed of light in atomic units (inverse fine-structure constant).
pub const SPEED_OF_LIGHT: f64 = 137.035_999_084;
/// Cycle-averaged intensity, in W/cm², of a field with unit atomic amplitude.
pub const INTENSITY_W_CM2: f64 = 3.509_445e16;

/// Peak field amplitude (a.u.) of a linearly polarized wave of intensity `w_cm2`.
pub fn field_from_intensity(w_cm2: f64) -> f64 {
    (w_cm2 / INTENSITY_W_CM2).sqrt()
}

/// Inverse of [`field_from_intensity`].
pub fn intensity_from_field(amplitude: f64) -> f64 {
    amplitude * amplitude * INTENSITY_W_CM2
}

/// Length units accepted in table headers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LengthUnit {
    Bohr,
    Angstrom,
}

impl LengthUnit {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bohr" | "au" | "a0" => Some(Self::Bohr),
            "angstrom" | "ang" | "a" => Some(Self::Angstrom),
            _ => None,
        }
    }

    pub fn to_bohr(self) -> f64 {
        match self {
            Self::Bohr => 1.0,
            Self::Angstrom => ANGSTROM,
        }
    }
}

/// Value units accepted in table headers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueUnit {
    Hartree,
    Wavenumber,
    Electronvolt,
    Debye,
    /// Atomic units of whatever the column holds.
    Atomic,
}

impl ValueUnit {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hartree" | "eh" => Some(Self::Hartree),
            "cm-1" | "cm^-1" | "wavenumber" => Some(Self::Wavenumber),
            "ev" => Some(Self::Electronvolt),
            "debye" | "d" => Some(Self::Debye),
            "au" | "a.u." => Some(Self::Atomic),
            _ => None,
        }
    }

    pub fn to_atomic(self) -> f64 {
        match self {
            Self::Hartree | Self::Atomic => 1.0,
            Self::Wavenumber => WAVENUMBER,
            Self::Electronvolt => ELECTRONVOLT,
            Self::Debye => DEBYE,
        }
    }

    pub fn is_energy(self) -> bool {
        matches!(self, Self::Hartree | Self::Wavenumber | Self::Electronvolt | Self::Atomic)
    }

    pub fn is_dipole(self) -> bool {
        matches!(self, Self::Debye | Self::Atomic)
    }
}
