//! Concrete sample spaces.

mod euclidean;
pub mod openbook;
pub mod sphere;
pub mod spd;

pub use euclidean::EuclideanSpace;
pub use openbook::{
    openbook_classify, openbook_distance, openbook_fold, openbook_frechet_mean, openbook_moments,
    OpenBookMoments, OpenBookSpace, Stickiness,
};
pub use sphere::{
    extrinsic_project, geodesic_distance, sphere_exp, sphere_log, SphereMetric, SphereSpace,
};
pub use spd::{spd_mean, SpdMetric, SpdSpace};

pub use crate::linalg::{spd_expm, spd_logm, unvech as spd_unvech, vech as spd_vech};
