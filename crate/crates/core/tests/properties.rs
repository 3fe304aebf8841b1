//! Property-based checks complementing the unit suites: invariants that
//! should hold for *any* input, exercised over random cases.

use proptest::prelude::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sitrep::blend::{predict_smooth, DihedralTransform};
use sitrep::cowts::{feasible, solve_exact, solve_greedy, IlpInstance, DEFAULT_NODE_CAP};
use sitrep::raster::{patchify, reassemble, RasterImage, NUM_CLASSES};
use sitrep::seg::ProbabilityMap;
use sitrep::tweets::{preprocess, tfidf, tokenize, CorpusStats, TermStats};

fn random_image(seed: u64, width: usize, height: usize) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..width * height * 3).map(|_| rng.gen::<u8>()).collect();
    RasterImage::new(width, height, data).unwrap()
}

fn random_probs(seed: u64, width: usize, height: usize) -> ProbabilityMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probs = ProbabilityMap::constant(width, height, [0.25; NUM_CLASSES]);
    for y in 0..height {
        for x in 0..width {
            let raw: [f64; NUM_CLASSES] = std::array::from_fn(|_| rng.gen_range(0.05..1.0));
            let total: f64 = raw.iter().sum();
            let px = probs.pixel_mut(x, y);
            for k in 0..NUM_CLASSES {
                px[k] = raw[k] / total;
            }
        }
    }
    probs
}

fn random_instance(seed: u64, max_n: usize, max_m: usize) -> IlpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(0..=max_m);
    let lengths: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=6)).collect();
    let scores: Vec<f64> = (0..m).map(|_| rng.gen_range(0..=500) as f64 / 100.0).collect();
    let t_sets: Vec<Vec<usize>> = (0..m)
        .map(|_| {
            let k = rng.gen_range(1..=3.min(n));
            let mut t: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
            t.sort_unstable();
            t.dedup();
            t
        })
        .collect();
    let mut c_sets = vec![Vec::new(); n];
    for (j, t) in t_sets.iter().enumerate() {
        for &i in t {
            c_sets[i].push(j);
        }
    }
    let total: usize = lengths.iter().sum();
    let budget = rng.gen_range(0..=total);
    IlpInstance { n, m, lengths, scores, t_sets, c_sets, budget }
}

proptest! {
    /// Cleaning already-clean text changes nothing.
    #[test]
    fn preprocess_is_idempotent(raw in "\\PC{0,200}") {
        let once = preprocess(&raw);
        prop_assert_eq!(preprocess(&once), once);
    }

    /// Tokens are non-empty, lowercase, and drawn from the token alphabet.
    #[test]
    fn tokenize_emits_lowercase_alphanumeric_tokens(text in "\\PC{0,200}") {
        for token in tokenize(&text) {
            prop_assert!(!token.is_empty());
            prop_assert_eq!(token.clone(), token.to_lowercase());
            prop_assert!(token.chars().all(|c| c.is_alphanumeric() || c == '+'));
        }
    }

    /// With the per-containing-document average fixed, a rarer term always
    /// scores strictly higher.
    #[test]
    fn tfidf_strictly_decreases_with_document_frequency(
        n_docs in 2usize..200,
        avg_times_ten in 10u32..80,
        doc_freq in 1usize..199,
    ) {
        prop_assume!(doc_freq + 1 <= n_docs);
        let avg_count = f64::from(avg_times_ten) / 10.0;
        let stats = CorpusStats {
            n_docs,
            terms: [
                ("rare".to_string(), TermStats { doc_freq, avg_count }),
                ("common".to_string(), TermStats { doc_freq: doc_freq + 1, avg_count }),
            ]
            .into_iter()
            .collect(),
        };
        let rare = tfidf(&stats, "rare").unwrap();
        let common = tfidf(&stats, "common").unwrap();
        prop_assert!(rare > common, "rare {rare} vs common {common}");
    }

    /// Patchify followed by reassemble reproduces any tile-aligned raster.
    #[test]
    fn patchify_reassemble_is_identity(
        rows in 1usize..5,
        cols in 1usize..5,
        patch_size in prop::sample::select(vec![4usize, 8, 16]),
        seed in any::<u64>(),
    ) {
        let image = random_image(seed, cols * patch_size, rows * patch_size);
        let (patches, grid) = patchify(&image, patch_size).unwrap();
        prop_assert_eq!(patches.len(), rows * cols);
        prop_assert_eq!(reassemble(&patches, &grid).unwrap(), image);
    }

    /// Every dihedral transform undoes itself through its inverse, for both
    /// images and probability maps (bit-for-bit).
    #[test]
    fn dihedral_apply_then_invert_is_identity(
        id in 0u8..8,
        size in 1usize..24,
        seed in any::<u64>(),
    ) {
        // Rotations are only defined for square patches, matching how the
        // blender applies them to square windows.
        let (width, height) = (size, size);
        let t = DihedralTransform::new(id).unwrap();
        let image = random_image(seed, width, height);
        let back = t.inverse().apply_image(&t.apply_image(&image).unwrap()).unwrap();
        prop_assert_eq!(back, image);

        let probs = random_probs(seed, width, height);
        let back = t.inverse().apply_probs(&t.apply_probs(&probs).unwrap()).unwrap();
        prop_assert_eq!(back.width, probs.width);
        prop_assert_eq!(back.height, probs.height);
        for (a, b) in back.data.iter().zip(&probs.data) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    /// The greedy fallback never beats the exact solver, and both produce
    /// feasible solutions.
    #[test]
    fn greedy_never_beats_exact(seed in any::<u64>()) {
        let instance = random_instance(seed, 10, 12);
        let exact = solve_exact(&instance, DEFAULT_NODE_CAP).unwrap();
        let greedy = solve_greedy(&instance).unwrap();
        prop_assert!(exact.proven_optimal);
        prop_assert!(!greedy.proven_optimal);
        prop_assert!(feasible(&exact, &instance).unwrap().feasible);
        prop_assert!(feasible(&greedy, &instance).unwrap().feasible);
        prop_assert!(greedy.objective <= exact.objective + 1e-9,
            "greedy {} beat exact {}", greedy.objective, exact.objective);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// A constant predictor passes through smooth blending unchanged for any
    /// valid window/subdivision pair, with or without augmentation.
    #[test]
    fn blending_preserves_constant_predictions(
        window in prop::sample::select(vec![4usize, 8, 12, 16]),
        subdivisions in prop::sample::select(vec![1usize, 2, 4]),
        width in 5usize..40,
        height in 5usize..40,
        use_augmentation in any::<bool>(),
        seed in any::<u64>(),
    ) {
        prop_assume!(window % subdivisions == 0);
        // Mirror padding needs the margin (half the window) to fit inside
        // the image.
        prop_assume!(width > window / 2 && height > window / 2);
        let image = random_image(seed, width, height);
        let dist = [0.4, 0.3, 0.2, 0.1];
        let probs = predict_smooth(&image, window, subdivisions, use_augmentation, |patch| {
            Ok(ProbabilityMap::constant(patch.width, patch.height, dist))
        })
        .unwrap();
        for y in 0..height {
            for x in 0..width {
                for k in 0..NUM_CLASSES {
                    prop_assert!((probs.pixel(x, y)[k] - dist[k]).abs() < 1e-6);
                }
            }
        }
    }
}
