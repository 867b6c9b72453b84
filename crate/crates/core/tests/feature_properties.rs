mod common;

use common::props::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cd_is_total_and_sectors_partition(dx in finite(), dy in finite()) {
        cd_totality(dx, dy)?;
    }

    #[test]
    fn cd_rotates_with_the_scene((target, reference) in rotation_case()) {
        cd_rotation(target, reference)?;
    }

    #[test]
    fn binary_features_ignore_common_translation((m, offset) in translation_case()) {
        translation_invariance(m, offset)?;
    }

    #[test]
    fn features_are_scale_coherent((m, factor) in scale_case()) {
        scale_coherence(m, factor)?;
    }

    #[test]
    fn band_and_threshold_edges((u, y, negative) in boundary_case()) {
        boundary_rules(u, y, negative)?;
    }
}
