//! Weights-free stand-in for a vision-language model whose spatial answers
//! are read off its own image attention.
//!
//! Even heads attend to the queried object, odd heads to the reference
//! object. Each head's final-row image logits come from a scripted, seeded
//! distribution; after the hook and softmax, the attention-weighted centroid
//! (and mean depth) of each head group is compared and turned into answer
//! logits:
//!
//! ```text
//! left = -k·dx   right = k·dx   on = -k·dy   under = k·dy
//! behind = k_d·dz   front = -k_d·dz
//! ```
//!
//! where `(dy, dx, dz)` is query minus reference. Two attention regimes are
//! scripted:
//!
//! * focused: a sharp peak on one cell of the queried object, the object's
//!   footprint at a high logit, and a broad distractor block around the
//!   mirror image of the object through the reference centre;
//! * misplaced: the sharp peak sits on the mirror cell instead and the true
//!   footprint keeps residual mass. The peak height is chosen so the
//!   footprint overtakes the peak once the temperature drops below a per-item
//!   crossover.
//!
//! Traces are final-row only (`AITR`): every earlier row would be constant.

use crate::bench::scene::{PlacedObject, SceneSpec};
use crate::engine::config::ModelConfig;
use crate::engine::decode::{AttentionHook, DecoderModel, ForwardPass, HookContext};
use crate::engine::sequence::TokenSequence;
use crate::engine::trace::{AttentionTrace, TraceLayout};
use crate::engine::vocab;
use crate::error::{Error, Result};
use crate::relation::Relation;
use crate::rng::SplitMix64;
use crate::tensor::softmax;

#[derive(Debug, Clone, PartialEq)]
pub struct RefereeParams {
    /// Logit of the attended object's footprint above the background.
    pub object_logit: f64,
    /// Extra logit on the single focus cell.
    pub focus_boost: f64,
    /// Width of the per-item uniform jitter on `focus_boost`.
    pub focus_jitter: f64,
    /// Logit of the distractor block in focused rows.
    pub distractor_logit: f64,
    /// Chebyshev radius of the distractor block, in units of `grid_side / 12`.
    pub distractor_radius: usize,
    /// Range the misplaced-peak crossover temperature is drawn from.
    pub crossover_range: (f64, f64),
    pub misplacement_prob: f64,
    /// Half-width of the uniform background noise.
    pub noise: f64,
    /// Answer logit per patch of centroid displacement.
    pub answer_scale: f64,
    /// Answer logit per unit of perceived depth difference.
    pub depth_scale: f64,
    /// Logit on the text columns of the final row.
    pub text_logit: f64,
}

impl Default for RefereeParams {
    fn default() -> Self {
        Self {
            object_logit: 10.0,
            focus_boost: 3.0,
            focus_jitter: 1.0,
            distractor_logit: 7.5,
            distractor_radius: 2,
            crossover_range: (0.6, 1.0),
            misplacement_prob: 0.3,
            noise: 0.3,
            answer_scale: 1.2,
            depth_scale: 4.0,
            text_logit: 6.0,
        }
    }
}

/// Scripted image logits for one layer: one row per head, `P²` entries each.
pub type LayerLogits = Vec<Vec<f64>>;

#[derive(Debug, Clone)]
pub struct ScriptedReferee {
    config: ModelConfig,
    scene: SceneSpec,
    reversed: bool,
    options: Vec<Relation>,
    params: RefereeParams,
    misplaced: bool,
    image_logits: Vec<LayerLogits>,
}

/// Attention-weighted centroid `(row, col)` of a distribution over a
/// row-major `side x side` grid.
pub fn attention_centroid(probs: &[f64], side: usize) -> (f64, f64) {
    let mut total = 0.0;
    let (mut r, mut c) = (0.0, 0.0);
    for (k, p) in probs.iter().enumerate() {
        r += p * (k / side) as f64;
        c += p * (k % side) as f64;
        total += p;
    }
    (r / total, c / total)
}

/// Background-noise row with one raised cell.
pub fn peaked_logits(side: usize, peak: (usize, usize), sharpness: f64, noise: f64, seed: u64) -> Result<Vec<f64>> {
    if peak.0 >= side || peak.1 >= side {
        return Err(Error::contract(format!(
            "peak ({}, {}) outside {side}x{side} grid",
            peak.0, peak.1
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut row: Vec<f64> = (0..side * side).map(|_| rng.uniform(-noise, noise)).collect();
    row[peak.0 * side + peak.1] += sharpness;
    Ok(row)
}

fn mirror_cell(query: &PlacedObject, reference: &PlacedObject, side: usize) -> (usize, usize) {
    let (qr, qc) = query.center();
    let (rr, rc) = reference.center();
    let clamp = |v: f64| v.round().clamp(0.0, (side - 1) as f64) as usize;
    (clamp(2.0 * rr - qr), clamp(2.0 * rc - qc))
}

impl ScriptedReferee {
    /// Draw the scripted attention for `scene`. With `reversed`, the reference
    /// object becomes the queried one.
    pub fn new(
        scene: &SceneSpec,
        reversed: bool,
        options: &[Relation],
        config: &ModelConfig,
        params: &RefereeParams,
    ) -> Result<Self> {
        Self::check(scene, options, config)?;
        let side = scene.grid_side;
        let (query, reference) = if reversed {
            (&scene.object_b, &scene.object_a)
        } else {
            (&scene.object_a, &scene.object_b)
        };
        let mut item_rng = SplitMix64::derive(scene.seed, 0x5EED);
        let misplaced = item_rng.next_f64() < params.misplacement_prob;
        let u = item_rng.next_f64();
        let (lo, hi) = params.crossover_range;
        let crossover = lo + (hi - lo) * u;
        let focus = params.focus_boost + params.focus_jitter * (u - 0.5);
        let q_cells: Vec<_> = query.cells().collect();
        let r_cells: Vec<_> = reference.cells().collect();
        let mirror = mirror_cell(query, reference, side);
        let radius = params.distractor_radius * (side / 12).max(1);
        let idx = |(r, c): (usize, usize)| r * side + c;

        let mut image_logits = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let mut heads = Vec::with_capacity(config.heads);
            for h in 0..config.heads {
                let mut rng = SplitMix64::derive(scene.seed, 1 + (l * config.heads + h) as u64);
                let mut row: Vec<f64> = (0..side * side)
                    .map(|_| rng.uniform(-params.noise, params.noise))
                    .collect();
                if h % 2 == 0 {
                    for c in &q_cells {
                        row[idx(*c)] += params.object_logit;
                    }
                    if misplaced {
                        let count = q_cells.len().max(2) as f64;
                        row[idx(mirror)] += params.object_logit + count.ln() / crossover;
                    } else {
                        let f = q_cells[rng.below(q_cells.len() as u64) as usize];
                        row[idx(f)] += focus;
                        for r in mirror.0.saturating_sub(radius)..(mirror.0 + radius + 1).min(side) {
                            for c in mirror.1.saturating_sub(radius)..(mirror.1 + radius + 1).min(side) {
                                if !query.contains(r, c) {
                                    row[idx((r, c))] += params.distractor_logit;
                                }
                            }
                        }
                    }
                } else {
                    for c in &r_cells {
                        row[idx(*c)] += params.object_logit;
                    }
                    let f = r_cells[rng.below(r_cells.len() as u64) as usize];
                    row[idx(f)] += params.focus_boost;
                }
                heads.push(row);
            }
            image_logits.push(heads);
        }
        Ok(Self {
            config: *config,
            scene: scene.clone(),
            reversed,
            options: options.to_vec(),
            params: params.clone(),
            misplaced,
            image_logits,
        })
    }

    /// Referee with explicitly supplied image logits, `[layer][head][P²]`.
    pub fn from_logits(
        scene: &SceneSpec,
        reversed: bool,
        options: &[Relation],
        config: &ModelConfig,
        params: &RefereeParams,
        image_logits: Vec<LayerLogits>,
    ) -> Result<Self> {
        Self::check(scene, options, config)?;
        let cells = scene.grid_side * scene.grid_side;
        let ok = image_logits.len() == config.layers
            && image_logits
                .iter()
                .all(|l| l.len() == config.heads && l.iter().all(|r| r.len() == cells));
        if !ok {
            return Err(Error::Shape(format!(
                "image logits must be [{}][{}][{cells}]",
                config.layers, config.heads
            )));
        }
        Ok(Self {
            config: *config,
            scene: scene.clone(),
            reversed,
            options: options.to_vec(),
            params: params.clone(),
            misplaced: false,
            image_logits,
        })
    }

    fn check(scene: &SceneSpec, options: &[Relation], config: &ModelConfig) -> Result<()> {
        config.validate()?;
        scene.validate()?;
        if scene.grid_side != config.patch_side {
            return Err(Error::contract(format!(
                "scene grid {} does not match patch_side {}",
                scene.grid_side, config.patch_side
            )));
        }
        if config.heads < 2 {
            return Err(Error::contract("referee needs at least two heads"));
        }
        if options.is_empty() {
            return Err(Error::contract("referee needs at least one answer option"));
        }
        Ok(())
    }

    pub fn misplaced(&self) -> bool {
        self.misplaced
    }

    pub fn scene(&self) -> &SceneSpec {
        &self.scene
    }

    pub fn image_logits(&self) -> &[LayerLogits] {
        &self.image_logits
    }

    fn depth_at(&self, k: usize) -> f64 {
        let side = self.scene.grid_side;
        self.scene
            .object_at(k / side, k % side)
            .map_or(1.0, |o| o.depth)
    }

    /// Answer logits per option from head-group centroids, given the
    /// post-hook within-image distributions `[layer][head][P²]`.
    pub fn answer_logits(&self, image_probs: &[Vec<Vec<f64>>]) -> Vec<(Relation, f64)> {
        let side = self.scene.grid_side;
        let mut acc = [[0.0f64; 3]; 2];
        let mut counts = [0usize; 2];
        for layer in image_probs {
            for (h, probs) in layer.iter().enumerate() {
                let g = h % 2;
                let (r, c) = attention_centroid(probs, side);
                let z: f64 = probs.iter().enumerate().map(|(k, p)| p * self.depth_at(k)).sum();
                acc[g][0] += r;
                acc[g][1] += c;
                acc[g][2] += z;
                counts[g] += 1;
            }
        }
        let mean = |g: usize, i: usize| acc[g][i] / counts[g] as f64;
        let dy = mean(0, 0) - mean(1, 0);
        let dx = mean(0, 1) - mean(1, 1);
        let dz = mean(0, 2) - mean(1, 2);
        let (k, kd) = (self.params.answer_scale, self.params.depth_scale);
        self.options
            .iter()
            .map(|r| {
                let v = match r {
                    Relation::Left => -k * dx,
                    Relation::Right => k * dx,
                    Relation::On => -k * dy,
                    Relation::Under => k * dy,
                    Relation::Behind => kd * dz,
                    Relation::Front => -kd * dz,
                };
                (*r, v)
            })
            .collect()
    }

    pub fn reversed(&self) -> bool {
        self.reversed
    }
}

impl DecoderModel for ScriptedReferee {
    fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn forward(&self, seq: &TokenSequence, hook: &dyn AttentionHook, step: usize) -> Result<ForwardPass> {
        let c = &self.config;
        let n = seq.len();
        if n > c.max_seq {
            return Err(Error::Capacity { len: n, max: c.max_seq });
        }
        let span = seq.image_span;
        span.check_within(n)?;
        if span.len != c.image_tokens() {
            return Err(Error::contract(format!(
                "image span of {} tokens, referee expects {}",
                span.len,
                c.image_tokens()
            )));
        }
        if span.end() > n - 1 {
            return Err(Error::contract("final position must follow the image span"));
        }
        let mut trace = Vec::with_capacity(c.layers * c.heads * n);
        let mut pre_hook = Vec::with_capacity(c.layers * c.heads * n);
        let mut image_probs = Vec::with_capacity(c.layers);
        for l in 0..c.layers {
            let mut heads = Vec::with_capacity(c.heads);
            for h in 0..c.heads {
                let mut row = vec![self.params.text_logit; n];
                row[span.range()].copy_from_slice(&self.image_logits[l][h]);
                pre_hook.extend_from_slice(&row);
                hook.apply(HookContext { step, layer: l, head: h }, &mut row[span.range()]);
                heads.push(softmax(&row[span.range()]));
                trace.extend_from_slice(&row);
            }
            image_probs.push(heads);
        }

        // Once an answer word has been emitted the only continuation is end-of-answer.
        let answered = seq.last_token().and_then(vocab::token_relation).is_some();
        let logits = if answered {
            let mut l = vec![-30.0; c.vocab_size];
            l[vocab::EOS as usize] = 0.0;
            l
        } else {
            let answers = self.answer_logits(&image_probs);
            let floor = answers.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min) - 30.0;
            let mut l = vec![floor; c.vocab_size];
            for (r, v) in answers {
                l[vocab::relation_token(r) as usize] = v;
            }
            l
        };
        let trace = AttentionTrace::new(*c, span, n, TraceLayout::LastRow, trace)?.with_pre_hook(pre_hook)?;
        Ok(ForwardPass {
            next_token_logits: logits,
            trace,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::encode::build_prompt;
    use crate::bench::scene::place_scene;
    use crate::engine::decode::{decode_greedy, NoHook};
    use crate::tensor::softmax;

    const OPTS: [Relation; 4] = [Relation::Left, Relation::Right, Relation::On, Relation::Under];

    fn config() -> ModelConfig {
        ModelConfig {
            max_seq: 208,
            ..ModelConfig::default()
        }
    }

    fn left_scene() -> SceneSpec {
        place_scene(12, "mug", "table", Relation::Left, &mut SplitMix64::new(11)).unwrap()
    }

    fn prompt() -> TokenSequence {
        build_prompt("Where is the mug in relation to the table?", None, &config()).unwrap()
    }

    fn center_cell(o: &PlacedObject) -> (usize, usize) {
        (o.row + o.height / 2, o.col + o.width / 2)
    }

    /// Query heads peaked on `q`, reference heads peaked on `r`.
    fn peaked(q: (usize, usize), r: (usize, usize), sharpness: f64) -> Vec<LayerLogits> {
        let c = config();
        (0..c.layers)
            .map(|_| {
                (0..c.heads)
                    .map(|h| peaked_logits(12, if h % 2 == 0 { q } else { r }, sharpness, 0.0, 0).unwrap())
                    .collect()
            })
            .collect()
    }

    fn answer(model: &ScriptedReferee, hook: &dyn AttentionHook) -> (String, f64) {
        let d = decode_greedy(model, &prompt(), hook, 2).unwrap();
        (d.answer_text().to_string(), d.answer_confidence)
    }

    #[test]
    fn one_hot_focus_reads_true_geometry() {
        let s = left_scene();
        let logits = peaked(center_cell(&s.object_a), center_cell(&s.object_b), 60.0);
        let m = ScriptedReferee::from_logits(&s, false, &OPTS, &config(), &RefereeParams::default(), logits).unwrap();
        let (a, conf) = answer(&m, &NoHook);
        assert_eq!(a, "left");
        assert!(conf > 0.5);
        let rev = ScriptedReferee::from_logits(
            &s,
            true,
            &OPTS,
            &config(),
            &RefereeParams::default(),
            peaked(center_cell(&s.object_b), center_cell(&s.object_a), 60.0),
        )
        .unwrap();
        assert_eq!(answer(&rev, &NoHook).0, "right");
    }

    #[test]
    fn uniform_attention_ties_to_lowest_token() {
        let s = left_scene();
        let flat = vec![vec![vec![0.0; 144]; 2]; 2];
        let m = ScriptedReferee::from_logits(&s, false, &OPTS, &config(), &RefereeParams::default(), flat).unwrap();
        let probs = vec![vec![softmax(&[0.0; 144]); 2]; 2];
        assert!(m.answer_logits(&probs).iter().all(|(_, v)| *v == 0.0));
        assert_eq!(answer(&m, &NoHook).0, "left");
    }

    #[test]
    fn smoothing_recovers_misplaced_focus() {
        // A: 2x2 at rows 5-6, cols 1-2. B: 2x4 at rows 5-6, cols 4-7, centre (5.5, 5.5).
        // Query rows: A cells at 10, mirror cell (6, 10) at 10 + ln4/0.75; reference rows: B cells at 10.
        // α = 1: mirror:A mass ≈ e^1.848/4 ≈ 1.59, query centroid ≈ (5.81, 6.72), dx ≈ +1.2 → "right".
        // α = 0.5: mirror:A ≈ 0.63 and background ≈ 13% of mass, centroid col ≈ 4.9, dx ≈ -0.6 → "left".
        let obj = |label: &str, col, width| PlacedObject {
            label: label.into(),
            row: 5,
            col,
            height: 2,
            width,
            depth: 1.0,
        };
        let s = SceneSpec {
            grid_side: 12,
            object_a: obj("mug", 1, 2),
            object_b: obj("table", 4, 4),
            relation: Relation::Left,
            seed: 0,
        };
        let mut q = vec![0.0; 144];
        s.object_a.cells().for_each(|(r, c)| q[r * 12 + c] = 10.0);
        q[6 * 12 + 10] = 10.0 + 4f64.ln() / 0.75;
        let mut r = vec![0.0; 144];
        s.object_b.cells().for_each(|(rr, c)| r[rr * 12 + c] = 10.0);
        let logits = vec![vec![q, r]; 2];
        let m = ScriptedReferee::from_logits(&s, false, &OPTS, &config(), &RefereeParams::default(), logits).unwrap();
        assert_eq!(answer(&m, &ScalingHookFixture(1.0)).0, "right");
        assert_eq!(answer(&m, &ScalingHookFixture(0.5)).0, "left");
    }

    #[test]
    fn misplacement_draw_follows_probability() {
        let params = |p| RefereeParams {
            misplacement_prob: p,
            ..RefereeParams::default()
        };
        let s = left_scene();
        assert!(ScriptedReferee::new(&s, false, &OPTS, &config(), &params(1.0)).unwrap().misplaced());
        assert!(!ScriptedReferee::new(&s, false, &OPTS, &config(), &params(0.0)).unwrap().misplaced());
    }

    struct ScalingHookFixture(f64);

    impl AttentionHook for ScalingHookFixture {
        fn apply(&self, _ctx: HookContext, image_logits: &mut [f64]) {
            image_logits.iter_mut().for_each(|v| *v *= self.0);
        }
    }

    #[test]
    fn sharpening_a_correct_focus_raises_confidence() {
        let s = left_scene();
        let logits = peaked(center_cell(&s.object_a), center_cell(&s.object_b), 3.0);
        let m = ScriptedReferee::from_logits(&s, false, &OPTS, &config(), &RefereeParams::default(), logits).unwrap();
        let mut last = 0.0;
        for alpha in [1.0, 1.2, 1.5, 2.0] {
            let (a, p) = answer(&m, &ScalingHookFixture(alpha));
            assert_eq!(a, "left");
            assert!(p >= last, "alpha {alpha}: {p} < {last}");
            last = p;
        }
    }

    #[test]
    fn peak_must_lie_on_grid() {
        assert!(peaked_logits(12, (12, 0), 1.0, 0.0, 0).is_err());
        assert!(peaked_logits(12, (3, 11), 1.0, 0.0, 0).is_ok());
    }

    #[test]
    fn hook_touches_only_image_columns() {
        let s = left_scene();
        let m = ScriptedReferee::new(&s, false, &OPTS, &config(), &RefereeParams::default()).unwrap();
        let seq = prompt();
        let plain = m.forward(&seq, &NoHook, 0).unwrap().trace;
        let hooked = m.forward(&seq, &ScalingHookFixture(2.0), 0).unwrap().trace;
        let (n, span) = (seq.len(), seq.image_span);
        assert_eq!(plain.layout(), TraceLayout::LastRow);
        for l in 0..2 {
            for h in 0..2 {
                let (a, b) = (plain.logits_row(l, h, n - 1).unwrap(), hooked.logits_row(l, h, n - 1).unwrap());
                for j in 0..n {
                    if span.contains(j) {
                        assert_eq!(b[j], 2.0 * a[j]);
                    } else {
                        assert_eq!(a[j].to_bits(), b[j].to_bits());
                    }
                }
                assert_eq!(plain.pre_hook_row(l, h), hooked.pre_hook_row(l, h));
                assert_eq!(plain.pre_hook_row(l, h).unwrap(), a);
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let s = left_scene();
        let p = RefereeParams::default();
        let a = ScriptedReferee::new(&s, false, &OPTS, &config(), &p).unwrap();
        let b = ScriptedReferee::new(&s, false, &OPTS, &config(), &p).unwrap();
        assert_eq!(a.image_logits(), b.image_logits());
        assert!(ScriptedReferee::new(&s, false, &OPTS, &ModelConfig { heads: 1, model_dim: 8, ..config() }, &p).is_err());
    }
}
