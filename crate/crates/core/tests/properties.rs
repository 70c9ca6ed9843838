mod common;

use common::props::*;
use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn faces_partition_the_darts(rs in arb_rotation()) {
        face_partition(&rs)?;
    }

    #[test]
    fn mirror_image_has_the_same_surface(rs in arb_rotation()) {
        reversal_invariance(&rs)?;
    }

    #[test]
    fn flips_and_contractions_keep_genus(rs in arb_triangulation(), pick in any::<u16>()) {
        flip_contract_genus(&rs, pick)?;
    }

    #[test]
    fn gluing_two_holes_adds_a_handle(
        rs in arb_big_sphere(),
        pick in any::<(u16, u16)>(),
        order in any::<u8>(),
        drop in any::<u8>(),
    ) {
        excise_glue(&rs, pick, order, drop)?;
    }

    #[test]
    fn rule_r_star_holds_iff_all_faces_are_triangles(rs in prop_oneof![arb_rotation(), arb_triangulation()]) {
        r_star_iff_triangles(&rs)?;
    }

    #[test]
    fn scripts_commute_with_shifts(
        rs in arb_sphere_triangulation(),
        picks in proptest::collection::vec(any::<u16>(), 0..8),
        s in any::<u32>(),
    ) {
        shift_equivariance(&rs, &picks, s)?;
    }

    #[test]
    fn search_rediscovers_a_planted_handle(
        perm in arb_perm5(),
        mirror in any::<bool>(),
        hub in any::<u8>(),
        skip in any::<u8>(),
    ) {
        planted_rediscovery(perm, mirror, hub, skip)?;
    }
}
