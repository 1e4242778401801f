mod common;

use proptest::prelude::*;
use quadpatch::{
    build_quadtree, copatch_mask, dice_score, extract_patches, normalize_sequence,
    reconstruct_mask, EdgeMap, GrayImage, RasterImage, SequenceGeometry, TokenSequence,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn edges_from_seed(w: u32, h: u32, p: f64, seed: u64) -> EdgeMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EdgeMap::from_fn(w, h, |_, _| rng.gen_bool(p))
}

fn geometry(tree: &quadpatch::Quadtree, patch: u32, channels: u8) -> SequenceGeometry {
    SequenceGeometry {
        patch_size: patch,
        grid_size: tree.grid_size,
        original_size: tree.original_size,
        channels,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constant_square_images_give_constant_tokens(
        s in 1u32..7, level in 0u8..=255, ch in prop::sample::select(vec![1u8, 3]),
        p in 0.0f64..0.2, seed in any::<u64>(), v in 0u64..10,
    ) {
        let side = 1 << s;
        let img = RasterImage::filled(side, side, ch, level).unwrap();
        let tree = build_quadtree(&edges_from_seed(side, side, p, seed), v, 16);
        let want = level as f64 / 255.0;
        for t in extract_patches::<f64>(&img, &tree, 1).unwrap() {
            prop_assert!(t.pixels.iter().all(|&x| x == want));
        }
    }

    #[test]
    fn box_reduction_preserves_mean(
        s in 1u32..7, seed in any::<u64>(), p in 0.0f64..0.3, v in 0u64..6,
    ) {
        let side = 1 << s;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = RasterImage::new(side, side, 3, (0..side * side * 3).map(|_| rng.gen()).collect()).unwrap();
        let tree = build_quadtree(&edges_from_seed(side, side, p, seed ^ 1), v, 16);
        let pm = (tree.min_leaf_side()).min(4);
        for t in extract_patches::<f64>(&img, &tree, pm).unwrap() {
            for c in 0..3usize {
                let mut src = 0.0;
                for y in t.origin.1..t.origin.1 + t.size {
                    for x in t.origin.0..t.origin.0 + t.size {
                        src += img.pixel(x, y)[c] as f64 / 255.0;
                    }
                }
                let src = src / (t.size * t.size) as f64;
                let tok: f64 = t.pixels.iter().skip(c).step_by(3).sum::<f64>() / (pm * pm) as f64;
                prop_assert!((src - tok).abs() <= 1e-6, "{src} vs {tok}");
            }
        }
    }

    #[test]
    fn tokens_are_in_strict_morton_order(
        w in 1u32..70, h in 1u32..70, p in 0.0f64..0.5, seed in any::<u64>(), l in 1u32..80,
    ) {
        let img = RasterImage::filled(w, h, 1, 7).unwrap();
        let tree = build_quadtree(&edges_from_seed(w, h, p, seed), 1, 16);
        let tokens = extract_patches::<f32>(&img, &tree, 1).unwrap();
        prop_assert!(tokens.windows(2).all(|p| p[0].morton < p[1].morton));
        let seq = normalize_sequence(tokens, geometry(&tree, 1, 1), l, seed).unwrap();
        prop_assert_eq!(seq.len(), l as usize);
        let real: Vec<_> = seq.real_tokens().collect();
        prop_assert!(real.windows(2).all(|p| p[0].morton < p[1].morton));
        // pads only at the tail
        let first_pad = seq.tokens.iter().position(|t| t.is_pad).unwrap_or(seq.len());
        prop_assert!(seq.tokens[first_pad..].iter().all(|t| t.is_pad && t.size == 0));
        prop_assert_eq!(real.len(), (tree.leaf_count()).min(l as usize));
    }

    #[test]
    fn normalization_is_deterministic(
        n in 1usize..200, l in 1u32..200, seed in any::<u64>(),
    ) {
        let side = 32;
        let img = RasterImage::filled(side, side, 1, 1).unwrap();
        let tree = build_quadtree(&EdgeMap::full(side, side), 0, 16);
        let mut tokens = extract_patches::<f32>(&img, &tree, 2).unwrap();
        tokens.truncate(n);
        let g = geometry(&tree, 2, 1);
        let a = normalize_sequence(tokens.clone(), g, l, seed).unwrap();
        let b = normalize_sequence(tokens, g, l, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn dice_is_symmetric_and_one_iff_equal(seed in any::<u64>(), w in 1u32..20, h in 1u32..20, flips in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = GrayImage::<f64>::from_fn(w, h, |_, _| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).unwrap();
        let mut b = a.clone();
        for _ in 0..flips {
            let i = rng.gen_range(0..b.data.len());
            b.data[i] = 1.0 - b.data[i];
        }
        let ab = dice_score(&a, &b).unwrap();
        let ba = dice_score(&b, &a).unwrap();
        prop_assert_eq!(ab.to_bits(), ba.to_bits());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab == 1.0, a == b);
    }
}

fn round_trip_mismatches(mask: &GrayImage<f32>) -> usize {
    let tree = build_quadtree(&common::boundary_map(mask), 0, 31);
    let tokens = copatch_mask(mask, &tree, 2).unwrap();
    let l = tokens.len() as u32;
    let seq: TokenSequence<f32> = normalize_sequence(tokens, geometry(&tree, 2, 1), l, 0).unwrap();
    let preds: Vec<&[f32]> = seq.real_tokens().map(|t| t.pixels.as_slice()).collect();
    let back = reconstruct_mask(&seq, &preds).unwrap();
    back.data.iter().zip(&mask.data).filter(|(a, b)| a != b).count()
}

#[test]
fn mask_round_trip_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..60 {
        let mask = common::random_mask(&mut rng, 90);
        assert_eq!(round_trip_mismatches(&mask), 0);
    }
}

#[test]
fn dropped_regions_reconstruct_to_zero() {
    let mask = GrayImage::<f32>::filled(16, 16, 1.0).unwrap();
    let tree = build_quadtree(&EdgeMap::full(16, 16), 0, 16);
    let tokens = copatch_mask(&mask, &tree, 2).unwrap();
    let seq = normalize_sequence(tokens, geometry(&tree, 2, 1), 10, 3).unwrap();
    let preds: Vec<&[f32]> = seq.real_tokens().map(|t| t.pixels.as_slice()).collect();
    let back = reconstruct_mask(&seq, &preds).unwrap();
    let ones = back.data.iter().filter(|&&v| v == 1.0).count();
    assert_eq!(ones, 10 * 4);
}
