//! Error type shared by the numerical experiments and the CLI.

use plunge_core::fourier::FourierError;
use plunge_core::geometry::GeometryError;
use plunge_core::gevrey::CutoffError;
use plunge_core::sectorization::SectorError;
use plunge_core::wavepackets::PacketError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{0}")]
    Geometry(GeometryError),
    #[error("{0}")]
    Cutoff(CutoffError),
    #[error("{0}")]
    Sector(SectorError),
    #[error("{0}")]
    Packet(PacketError),
    #[error("{0}")]
    Fourier(FourierError),
    #[error("envelope spans only {decades:.2} decades")]
    DegenerateFit { decades: f64 },
    #[error("window not negligible at the box edge (relative mass {edge_mass:.3e})")]
    Aliasing { edge_mass: f64 },
    #[error("eigensolver did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("domain.parse: {0}")]
    DomainParse(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

macro_rules! from_core {
    ($($t:ty => $v:ident),*) => {
        $(impl From<$t> for LabError {
            fn from(e: $t) -> Self {
                LabError::$v(e)
            }
        })*
    };
}

from_core!(GeometryError => Geometry, CutoffError => Cutoff, SectorError => Sector, PacketError => Packet, FourierError => Fourier);

impl LabError {
    /// Process exit code: 1 for bad input, 2 for a numerical budget failure.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            2
        } else {
            1
        }
    }

    fn is_numerical(&self) -> bool {
        matches!(
            self,
            LabError::DegenerateFit { .. }
                | LabError::Aliasing { .. }
                | LabError::NotConverged { .. }
                | LabError::Cutoff(CutoffError::GridTooCoarse { .. })
                | LabError::Packet(PacketError::NotConverged { .. })
                | LabError::Fourier(FourierError::NotConverged { .. } | FourierError::TruncationBudget { .. })
        )
    }

    /// Machine-readable error class.
    pub fn field(&self) -> &'static str {
        match self {
            LabError::DomainParse(_) => "domain.parse",
            LabError::Io(_) => "io",
            LabError::Json(_) => "config.parse",
            _ if self.is_numerical() => "numerical",
            _ => "validation",
        }
    }
}
