//! Obstacle reconstruction from MSR data: direct sampling and the
//! factorization method.

mod dsm;
mod field;
mod fm;

pub use dsm::{dsm, dsm_with};
pub use field::{colormap, ImagingField, ImagingMethod, SamplingGrid};
pub use fm::{
    f_sharp, f_sharp_spectrum, far_field_operator, fm, fm_with, FSharpSpectrum, FM_DEFAULT_REG,
    FM_MODE_FLOOR,
};
