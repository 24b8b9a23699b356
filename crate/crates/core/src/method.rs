use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Explanation methods compared by the retention benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    GradCam,
    HiResCam,
    GradCamPlusPlus,
    Ensemble,
    Random,
}

impl Method {
    /// Table column order.
    pub const ALL: [Method; 5] = [
        Method::GradCam,
        Method::HiResCam,
        Method::GradCamPlusPlus,
        Method::Ensemble,
        Method::Random,
    ];

    pub const CAMS: [Method; 4] = [
        Method::GradCam,
        Method::HiResCam,
        Method::GradCamPlusPlus,
        Method::Ensemble,
    ];

    /// Short name used on the command line and in file names.
    pub fn key(self) -> &'static str {
        match self {
            Method::GradCam => "gradcam",
            Method::HiResCam => "hirescam",
            Method::GradCamPlusPlus => "gradcampp",
            Method::Ensemble => "ensemble",
            Method::Random => "random",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Method::GradCam => "Grad-CAM",
            Method::HiResCam => "HiResCAM",
            Method::GradCamPlusPlus => "Grad-CAM++",
            Method::Ensemble => "Ensemble-CAM",
            Method::Random => "Random CAM",
        }
    }

    pub fn valid_keys() -> String {
        Method::ALL.map(Method::key).join(", ")
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownMethod(pub String);

impl fmt::Display for UnknownMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown method {:?} (valid: {})", self.0, Method::valid_keys())
    }
}

impl std::error::Error for UnknownMethod {}

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.key() == lower || m.display_name().to_ascii_lowercase() == lower)
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}
