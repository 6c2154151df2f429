use crate::error::{Error, Result};
use crate::geometry::{GrayImage, ImagePyramid, Shape};
use crate::model::ModelConfig;

/// One annotated image. The image is stored at the finest pyramid
/// resolution and `gt` lives in that level's frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub id: String,
    pub image: GrayImage,
    pub gt: Shape,
}

impl Sample {
    pub fn validate(&self, config: &ModelConfig) -> Result<()> {
        let side = config.image_resolution();
        if self.image.width != side || self.image.height != side {
            return Err(Error::Config(format!(
                "sample {}: image is {}x{}, expected {side}x{side}",
                self.id, self.image.width, self.image.height
            )));
        }
        if self.gt.len() != config.landmarks || self.gt.frame + 1 != config.iterations {
            return Err(Error::Config(format!(
                "sample {}: ground truth must hold {} landmarks in frame {}",
                self.id,
                config.landmarks,
                config.iterations - 1
            )));
        }
        Ok(())
    }

    pub fn pyramid(&self, config: &ModelConfig) -> Result<ImagePyramid> {
        ImagePyramid::build(&self.image, config.iterations)
    }
}
