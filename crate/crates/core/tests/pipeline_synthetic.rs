use std::path::Path;

use burstbg_core::bgmodel::CandidateState;
use burstbg_core::synth::{ever_covered, evaluate, evaluate_region, render_scene, SceneScript};
use burstbg_core::{recover_background, recover_background_observed, BinaryMask, NoObserver, Observer, PipelineConfig, Result};

const SMALL_SCENE: &str = "
width = 200
height = 150
frames = 8
background = procedural
background_seed = 3
occluder rect x=5 y=20 w=25 h=30 color=255,255,0 frames=0-7 step=24,4
occluder ellipse cx=170 cy=110 rx=15 ry=12 color=0,255,255 frames=0-7 step=-20,-8
";

fn small_scene() -> SceneScript {
    SceneScript::parse(SMALL_SCENE, Path::new(".")).unwrap()
}

#[derive(Default)]
struct Monotonicity {
    masks: Option<Vec<BinaryMask>>,
    defined: Option<BinaryMask>,
    states: usize,
}

impl Observer for Monotonicity {
    fn on_model_state(&mut self, _iteration: usize, state: &CandidateState, _changed: usize) -> Result<()> {
        if let Some(prev) = &self.masks {
            for (a, b) in prev.iter().zip(&state.masks) {
                assert!(a.is_subset_of(b), "a mask lost bits");
            }
        }
        if let Some(prev) = &self.defined {
            assert!(prev.is_subset_of(&state.background_defined), "defined coverage shrank");
        }
        self.masks = Some(state.masks.clone());
        self.defined = Some(state.background_defined.clone());
        self.states += 1;
        Ok(())
    }
}

#[test]
fn small_scene_is_recovered_exactly() {
    let scene = small_scene();
    let (stack, truth) = render_scene(&scene, scene.frames).unwrap();
    let (out, report) = recover_background(&stack, &PipelineConfig::default()).unwrap();
    let m = evaluate(&out, &truth).unwrap();
    assert_eq!(m.exact_match_fraction, 1.0, "{m:?} {report:?}");
    assert_eq!(m.undefined_fraction, 0.0);
    let covered = ever_covered(&scene, scene.frames);
    assert_eq!(evaluate_region(&out, &truth, &covered).unwrap().mean_abs_error, 0.0);
    assert!(report.converged);
}

#[test]
fn masks_and_coverage_only_grow() {
    let scene = small_scene();
    let (stack, _) = render_scene(&scene, scene.frames).unwrap();
    let mut obs = Monotonicity::default();
    let r = recover_background_observed(&stack, &PipelineConfig::default(), &mut obs).unwrap();
    assert_eq!(obs.states, r.report.iterations_run + 1);
}

#[test]
fn deghost_only_writes_input_values() {
    let scene = small_scene();
    let (stack, _) = render_scene(&scene, scene.frames).unwrap();
    let r = recover_background_observed(&stack, &PipelineConfig::default(), &mut NoObserver).unwrap();
    for idx in 0..r.background.pixel_count() {
        let (before, after) = (r.model_background.pixel_at(idx), r.background.pixel_at(idx));
        if !r.deghost.touched.get_at(idx) {
            assert_eq!(before, after);
        } else if before != after {
            assert!(stack.frames().iter().any(|f| f.pixel_at(idx) == after));
        }
    }
}

#[test]
fn identical_across_thread_counts() {
    let scene = small_scene();
    let (stack, _) = render_scene(&scene, scene.frames).unwrap();
    let run = |n: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        pool.install(|| recover_background(&stack, &PipelineConfig::default()).unwrap())
    };
    let (a, ra) = run(1);
    let (b, rb) = run(6);
    assert_eq!(a, b);
    assert_eq!(ra.changed_pixels_per_iter, rb.changed_pixels_per_iter);
}

#[test]
fn noisy_scene_stays_close() {
    let mut scene = small_scene();
    scene.noise_sigma = 1.5;
    scene.noise_seed = 4;
    let (stack, truth) = render_scene(&scene, scene.frames).unwrap();
    let (out, _) = recover_background(&stack, &PipelineConfig::default()).unwrap();
    let m = evaluate(&out, &truth).unwrap();
    assert_eq!(m.undefined_fraction, 0.0);
    assert!(m.mean_abs_error < 3.0, "{m:?}");
}
