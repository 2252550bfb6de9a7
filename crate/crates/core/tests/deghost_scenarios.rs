use burstbg_core::canny::canny_edges;
use burstbg_core::deghost::{deghost_traced, dilate, initial_candidates};
use burstbg_core::{DeghostParams, ImageStack, RasterImage};

fn textured(w: usize, h: usize) -> RasterImage {
    RasterImage::from_fn(w, h, |x, y| {
        [
            (60 + (x * 7 + y * 3) % 90) as u8,
            (80 + (x / 5 + y / 4) % 2 * 70) as u8,
            (50 + (x + 2 * y) % 60) as u8,
        ]
    })
    .unwrap()
}

fn with_patch(img: &RasterImage, x0: usize, y0: usize, w: usize, h: usize, c: [u8; 3]) -> RasterImage {
    let mut out = img.clone();
    for y in y0..y0 + h {
        for x in x0..x0 + w {
            out.set_pixel(x, y, c);
        }
    }
    out
}

#[test]
fn rectangle_outline_is_a_closed_contour() {
    let img = with_patch(&RasterImage::filled(80, 60, [30; 3]).unwrap(), 20, 15, 40, 30, [220; 3]);
    let edges = canny_edges(&img, 50.0, 150.0);
    // Every row crossing the rectangle has an edge near both sides, every
    // column near the top and bottom.
    for y in 17..43 {
        assert!((18..=22).any(|x| edges.get(x, y)), "left side open at row {y}");
        assert!((58..=62).any(|x| edges.get(x, y)), "right side open at row {y}");
    }
    for x in 22..58 {
        assert!((13..=17).any(|y| edges.get(x, y)), "top open at col {x}");
        assert!((43..=47).any(|y| edges.get(x, y)), "bottom open at col {x}");
    }
    // Nothing far from the outline.
    assert!(!edges.get(40, 30) && !edges.get(5, 5));
    let cands = initial_candidates(&edges, 3);
    assert_eq!(cands.to_mask(), dilate(&edges, 3));
}

#[test]
fn ghost_fragment_is_replaced_by_background() {
    let bg = textured(90, 70);
    let frames: Vec<RasterImage> = (0..6)
        .map(|i| with_patch(&bg, 5 + 13 * i, 8 + 9 * i, 14, 12, [255, 255, 0]))
        .collect();
    let stack = ImageStack::new(frames).unwrap();
    // A background that kept a corner of frame 2's occluder.
    let ghosted = with_patch(&bg, 31, 26, 6, 5, [255, 255, 0]);
    let (out, trace) = deghost_traced(&ghosted, &stack, &DeghostParams::default(), |_, _| {});
    assert_eq!(out, bg);
    assert!(trace.converged);
    assert!(trace.total_replaced() >= 6 * 5);
    assert_eq!(*trace.replaced_per_round.last().unwrap(), 0);
}

#[test]
fn ghost_with_background_luma_is_invisible() {
    // Edges come from luma alone; a magenta ghost on a texture of similar
    // brightness produces no candidates and survives.
    let bg = textured(90, 70);
    let frames: Vec<RasterImage> = (0..4)
        .map(|i| with_patch(&bg, 5 + 20 * i, 8, 14, 12, [255, 0, 255]))
        .collect();
    let stack = ImageStack::new(frames).unwrap();
    let ghosted = with_patch(&bg, 25, 8, 6, 5, [255, 0, 255]);
    let (out, trace) = deghost_traced(&ghosted, &stack, &DeghostParams::default(), |_, _| {});
    assert_eq!(trace.edges.count_ones(), 0);
    assert_eq!(out, ghosted);
}

#[test]
fn undefined_hole_is_filled() {
    let bg = textured(90, 70);
    let frames: Vec<RasterImage> = (0..5)
        .map(|i| with_patch(&bg, 10 + 15 * i, 30, 12, 20, [0, 255, 255]))
        .collect();
    let stack = ImageStack::new(frames).unwrap();
    let holed = with_patch(&bg, 40, 30, 12, 20, [0, 0, 0]);
    let (out, trace) = deghost_traced(&holed, &stack, &DeghostParams::default(), |_, _| {});
    assert_eq!(out, bg);
    assert!(trace.rounds() > 1);
}

#[test]
fn exact_copy_of_one_frame_is_kept() {
    // If the background equals one input frame everywhere, that frame scores
    // highest at every candidate and nothing is replaced.
    let bg = textured(60, 50);
    let frames: Vec<RasterImage> = (0..3)
        .map(|i| with_patch(&bg, 5 + 18 * i, 12, 10, 10, [255, 0, 255]))
        .collect();
    let stack = ImageStack::new(frames.clone()).unwrap();
    let (out, trace) = deghost_traced(&frames[1], &stack, &DeghostParams::default(), |_, _| {});
    assert_eq!(out, frames[1]);
    assert_eq!(trace.total_replaced(), 0);
}

#[test]
fn replacements_come_from_inputs_and_stay_inside_candidates() {
    let bg = textured(70, 50);
    let frames: Vec<RasterImage> = (0..4)
        .map(|i| with_patch(&bg, 4 + 15 * i, 10 + 5 * i, 12, 12, [0, 255, 255]))
        .collect();
    let stack = ImageStack::new(frames).unwrap();
    let ghosted = with_patch(&bg, 19, 15, 12, 12, [0, 255, 255]);
    let (out, trace) = deghost_traced(&ghosted, &stack, &DeghostParams::default(), |_, _| {});
    for idx in 0..out.pixel_count() {
        if out.pixel_at(idx) != ghosted.pixel_at(idx) {
            assert!(trace.touched.get_at(idx), "pixel {idx} changed without being a candidate");
            assert!(stack.frames().iter().any(|f| f.pixel_at(idx) == out.pixel_at(idx)));
        } else if !trace.touched.get_at(idx) {
            assert_eq!(out.pixel_at(idx), ghosted.pixel_at(idx));
        }
    }
}

#[test]
fn clean_background_is_left_alone() {
    let bg = textured(60, 40);
    let stack = ImageStack::new(vec![bg.clone(); 3]).unwrap();
    let (out, trace) = deghost_traced(&bg, &stack, &DeghostParams::default(), |_, _| {});
    assert_eq!(out, bg);
    assert_eq!(trace.total_replaced(), 0);
    assert_eq!(trace.rounds(), 1);
}

#[test]
fn round_cap_is_respected() {
    let bg = textured(90, 70);
    let frames: Vec<RasterImage> = (0..5)
        .map(|i| with_patch(&bg, 5 + 16 * i, 20, 14, 30, [255, 255, 0]))
        .collect();
    let stack = ImageStack::new(frames).unwrap();
    let ghosted = with_patch(&bg, 37, 20, 14, 30, [255, 255, 0]);
    let params = DeghostParams { max_rounds: 1, ..DeghostParams::default() };
    let (_, trace) = deghost_traced(&ghosted, &stack, &params, |_, _| {});
    assert_eq!(trace.rounds(), 1);
}
