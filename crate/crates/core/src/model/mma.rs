use super::config::ModelConfig;

/// Closed-form multiply-add counts of one stage for one sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StageMma {
    pub conv1: u64,
    pub conv2: u64,
    pub attention: u64,
    pub recurrent: u64,
    pub landmark: u64,
    pub error: u64,
}

impl StageMma {
    pub fn total(&self) -> u64 {
        self.conv1 + self.conv2 + self.attention + self.recurrent + self.landmark + self.error
    }

    pub fn conv(&self) -> u64 {
        self.conv1 + self.conv2
    }

    pub fn dense(&self) -> u64 {
        self.attention + self.recurrent + self.landmark + self.error
    }

    /// `(component, count)` pairs in network order.
    pub fn components(&self) -> [(&'static str, u64); 6] {
        [
            ("conv1", self.conv1),
            ("conv2", self.conv2),
            ("attention", self.attention),
            ("recurrent", self.recurrent),
            ("landmark_head", self.landmark),
            ("error_head", self.error),
        ]
    }
}

pub fn stage_mma(config: &ModelConfig) -> StageMma {
    let m = config.patches() as u64;
    let p = config.patch_size as u64;
    let c1 = config.conv1_channels as u64;
    let c2 = config.conv2_channels as u64;
    let d = config.descriptor_dim() as u64;
    let h = config.hidden as u64;
    let n = config.landmarks as u64;
    let conv1_side = p - 2;
    let conv2_side = config.conv2_side() as u64;
    StageMma {
        conv1: m * conv1_side * conv1_side * c1 * 9,
        conv2: m * conv2_side * conv2_side * c2 * 9 * c1,
        attention: m * d * d,
        recurrent: (m * d + h) * h,
        landmark: h * 2 * n,
        error: h,
    }
}

/// Total multiply-adds of `iterations` executed stages.
pub fn cascade_mma(config: &ModelConfig, iterations: usize) -> u64 {
    stage_mma(config).total() * iterations as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_patch_extractor_cost() {
        let mut c = ModelConfig::default();
        c.patch_indices = vec![0];
        let s = stage_mma(&c);
        assert_eq!(s.conv1, 20_736);
        assert_eq!(s.conv2, 73_728);
        assert_eq!(s.conv(), 94_464);
    }

    #[test]
    fn recurrent_cost_for_68_patches() {
        let s = stage_mma(&ModelConfig::default());
        assert_eq!(s.recurrent, 4_521_984);
        assert_eq!(s.attention, 68 * 65_536);
    }

    #[test]
    fn subset_ordering() {
        let c19 = cascade_mma(&ModelConfig::face68_19(), 3);
        let c34 = cascade_mma(&ModelConfig::face68_34(), 3);
        let c68 = cascade_mma(&ModelConfig::default(), 3);
        assert!(c19 < c34 && c34 < c68);
    }
}
