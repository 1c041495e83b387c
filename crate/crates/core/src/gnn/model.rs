//! Attentive message-passing regressor.
//!
//! Node states start from a linear+leaky-ReLU embedding of the atom
//! features. Each of the three message-passing rounds scores every
//! directed edge with a learned affine on [h_target || h_source']
//! (h_source' embeds edge features in the first round only), normalizes
//! scores over each target's in-neighbors by softmax, forms the context
//! as the attention-weighted sum of transformed neighbor states, and
//! updates the node state with a GRU cell. Readout repeats the same
//! attention pattern from a virtual super-node: the graph state starts as
//! the node-state sum and is refined for three steps by one shared GRU.
//! A final affine maps the graph state to the nine targets.
//!
//! Everything is f64 and has a hand-derived exact backward pass, verified
//! against central finite differences in the tests.

use ndarray::{concatenate, s, Array1, Array2, Axis};

use super::featurize::{GraphTensors, EDGE_FEATURES, NODE_FEATURES};
use crate::rng::{derive_seed, SplitMix64};

const LEAKY_SLOPE: f64 = 0.2;

fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

fn dleaky(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub w_i: Array2<f64>, // (in, 3H) gate order r|z|n
    pub w_h: Array2<f64>, // (H, 3H)
    pub b_i: Array1<f64>,
    pub b_h: Array1<f64>,
}

impl GruParams {
    fn init(input: usize, hidden: usize, rng: &mut SplitMix64) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        Self {
            w_i: Array2::from_shape_fn((input, 3 * hidden), |_| rng.uniform(-bound, bound)),
            w_h: Array2::from_shape_fn((hidden, 3 * hidden), |_| rng.uniform(-bound, bound)),
            b_i: Array1::zeros(3 * hidden),
            b_h: Array1::zeros(3 * hidden),
        }
    }

    fn zeros_like(&self) -> Self {
        Self {
            w_i: Array2::zeros(self.w_i.raw_dim()),
            w_h: Array2::zeros(self.w_h.raw_dim()),
            b_i: Array1::zeros(self.b_i.raw_dim()),
            b_h: Array1::zeros(self.b_h.raw_dim()),
        }
    }
}

struct GruCache {
    x: Array2<f64>,
    h: Array2<f64>,
    r: Array2<f64>,
    z: Array2<f64>,
    q: Array2<f64>, // W_hn h + b_hn
    n_tilde: Array2<f64>,
}

fn gru_forward(p: &GruParams, x: &Array2<f64>, h: &Array2<f64>) -> (Array2<f64>, GruCache) {
    let hidden = p.w_h.nrows();
    let gi = x.dot(&p.w_i) + &p.b_i;
    let gh = h.dot(&p.w_h) + &p.b_h;
    let m = x.nrows();
    let mut r = Array2::zeros((m, hidden));
    let mut z = Array2::zeros((m, hidden));
    let mut q = Array2::zeros((m, hidden));
    let mut n_tilde = Array2::zeros((m, hidden));
    let mut h_new = Array2::zeros((m, hidden));
    for i in 0..m {
        for k in 0..hidden {
            let rv = sigmoid(gi[(i, k)] + gh[(i, k)]);
            let zv = sigmoid(gi[(i, hidden + k)] + gh[(i, hidden + k)]);
            let qv = gh[(i, 2 * hidden + k)];
            let nv = (gi[(i, 2 * hidden + k)] + rv * qv).tanh();
            r[(i, k)] = rv;
            z[(i, k)] = zv;
            q[(i, k)] = qv;
            n_tilde[(i, k)] = nv;
            h_new[(i, k)] = (1.0 - zv) * nv + zv * h[(i, k)];
        }
    }
    (
        h_new,
        GruCache {
            x: x.clone(),
            h: h.clone(),
            r,
            z,
            q,
            n_tilde,
        },
    )
}

/// Returns (dx, dh, grads). `dh_new` is the gradient on the GRU output.
fn gru_backward(
    p: &GruParams,
    cache: &GruCache,
    dh_new: &Array2<f64>,
    grads: &mut GruParams,
) -> (Array2<f64>, Array2<f64>) {
    let hidden = p.w_h.nrows();
    let m = dh_new.nrows();
    let mut dgi = Array2::zeros((m, 3 * hidden));
    let mut dgh = Array2::zeros((m, 3 * hidden));
    let mut dh = Array2::zeros((m, hidden));
    for i in 0..m {
        for k in 0..hidden {
            let r = cache.r[(i, k)];
            let z = cache.z[(i, k)];
            let q = cache.q[(i, k)];
            let n = cache.n_tilde[(i, k)];
            let h_prev = cache.h[(i, k)];
            let d = dh_new[(i, k)];

            let dz = d * (h_prev - n);
            let dn = d * (1.0 - z);
            dh[(i, k)] += d * z;

            let dn_pre = dn * (1.0 - n * n);
            let dr = dn_pre * q;
            let dq = dn_pre * r;
            let dr_pre = dr * r * (1.0 - r);
            let dz_pre = dz * z * (1.0 - z);

            dgi[(i, k)] = dr_pre;
            dgi[(i, hidden + k)] = dz_pre;
            dgi[(i, 2 * hidden + k)] = dn_pre;
            dgh[(i, k)] = dr_pre;
            dgh[(i, hidden + k)] = dz_pre;
            dgh[(i, 2 * hidden + k)] = dq;
        }
    }
    grads.w_i += &cache.x.t().dot(&dgi);
    grads.w_h += &cache.h.t().dot(&dgh);
    grads.b_i += &dgi.sum_axis(Axis(0));
    grads.b_h += &dgh.sum_axis(Axis(0));
    let dx = dgi.dot(&p.w_i.t());
    dh += &dgh.dot(&p.w_h.t());
    (dx, dh)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// Edge-feature embedding, first layer only: (H + F_E, H).
    pub edge_w: Option<Array2<f64>>,
    pub edge_b: Option<Array1<f64>>,
    pub att_w: Array1<f64>, // (2H)
    pub att_b: Array1<f64>, // (1)
    pub ctx_w: Array2<f64>, // (H, H)
    pub gru: GruParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorParams {
    pub hidden: usize,
    pub init_w: Array2<f64>, // (F_N, H)
    pub init_b: Array1<f64>,
    pub layers: Vec<LayerParams>,
    pub readout_att_w: Array1<f64>,
    pub readout_att_b: Array1<f64>,
    pub readout_ctx_w: Array2<f64>,
    pub readout_gru: GruParams,
    pub out_w: Array2<f64>, // (H, outputs)
    pub out_b: Array1<f64>,
}

impl PredictorParams {
    pub fn init(hidden: usize, n_layers: usize, outputs: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::new(derive_seed(seed, "gnn-init"));
        let bound = 1.0 / (hidden as f64).sqrt();
        fn uni(rows: usize, cols: usize, bound: f64, rng: &mut SplitMix64) -> Array2<f64> {
            Array2::from_shape_fn((rows, cols), |_| rng.uniform(-bound, bound))
        }
        let init_w = uni(NODE_FEATURES, hidden, bound, &mut rng);
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let (edge_w, edge_b) = if l == 0 {
                (
                    Some(uni(hidden + EDGE_FEATURES, hidden, bound, &mut rng)),
                    Some(Array1::zeros(hidden)),
                )
            } else {
                (None, None)
            };
            let att_w = Array1::from_shape_fn(2 * hidden, |_| rng.uniform(-bound, bound));
            let ctx_w = uni(hidden, hidden, bound, &mut rng);
            let gru = GruParams::init(hidden, hidden, &mut rng);
            layers.push(LayerParams {
                edge_w,
                edge_b,
                att_w,
                att_b: Array1::zeros(1),
                ctx_w,
                gru,
            });
        }
        let readout_att_w = Array1::from_shape_fn(2 * hidden, |_| rng.uniform(-bound, bound));
        let readout_ctx_w = uni(hidden, hidden, bound, &mut rng);
        let readout_gru = GruParams::init(hidden, hidden, &mut rng);
        let out_w = uni(hidden, outputs, bound, &mut rng);
        Self {
            hidden,
            init_w,
            init_b: Array1::zeros(hidden),
            layers,
            readout_att_w,
            readout_att_b: Array1::zeros(1),
            readout_ctx_w,
            readout_gru,
            out_w,
            out_b: Array1::zeros(outputs),
        }
    }

    /// Named flat views over every trainable tensor, fixed order.
    pub fn trainable_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out: Vec<(String, &mut [f64])> = vec![
            ("init.w".into(), self.init_w.as_slice_mut().unwrap()),
            ("init.b".into(), self.init_b.as_slice_mut().unwrap()),
        ];
        for (l, layer) in self.layers.iter_mut().enumerate() {
            if let Some(w) = &mut layer.edge_w {
                out.push((format!("layer{l}.edge.w"), w.as_slice_mut().unwrap()));
            }
            if let Some(b) = &mut layer.edge_b {
                out.push((format!("layer{l}.edge.b"), b.as_slice_mut().unwrap()));
            }
            out.push((format!("layer{l}.att.w"), layer.att_w.as_slice_mut().unwrap()));
            out.push((format!("layer{l}.att.b"), layer.att_b.as_slice_mut().unwrap()));
            out.push((format!("layer{l}.ctx.w"), layer.ctx_w.as_slice_mut().unwrap()));
            out.push((format!("layer{l}.gru.w_i"), layer.gru.w_i.as_slice_mut().unwrap()));
            out.push((format!("layer{l}.gru.w_h"), layer.gru.w_h.as_slice_mut().unwrap()));
            out.push((format!("layer{l}.gru.b_i"), layer.gru.b_i.as_slice_mut().unwrap()));
            out.push((format!("layer{l}.gru.b_h"), layer.gru.b_h.as_slice_mut().unwrap()));
        }
        out.push(("readout.att.w".into(), self.readout_att_w.as_slice_mut().unwrap()));
        out.push(("readout.att.b".into(), self.readout_att_b.as_slice_mut().unwrap()));
        out.push(("readout.ctx.w".into(), self.readout_ctx_w.as_slice_mut().unwrap()));
        out.push(("readout.gru.w_i".into(), self.readout_gru.w_i.as_slice_mut().unwrap()));
        out.push(("readout.gru.w_h".into(), self.readout_gru.w_h.as_slice_mut().unwrap()));
        out.push(("readout.gru.b_i".into(), self.readout_gru.b_i.as_slice_mut().unwrap()));
        out.push(("readout.gru.b_h".into(), self.readout_gru.b_h.as_slice_mut().unwrap()));
        out.push(("out.w".into(), self.out_w.as_slice_mut().unwrap()));
        out.push(("out.b".into(), self.out_b.as_slice_mut().unwrap()));
        out
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        let _ = z
            .trainable_mut()
            .into_iter()
            .map(|(_, s)| s.fill(0.0))
            .collect::<Vec<_>>();
        z
    }
}

struct LayerCache {
    h_in: Array2<f64>,
    hat_pre: Option<Array2<f64>>, // layer 0 pre-activation
    hat: Array2<f64>,             // (E, H)
    att_in: Array2<f64>,          // (E, 2H)
    s_pre: Array1<f64>,
    alpha: Array1<f64>,
    wc: Array2<f64>, // (E, H)
    gru: GruCache,
}

struct ReadoutCache {
    att_in: Array2<f64>, // (n, 2H)
    s_pre: Array1<f64>,
    alpha: Array1<f64>,
    wc: Array2<f64>, // (n, H)
    gru: GruCache,
}

pub struct PredictorCache {
    h0_pre: Array2<f64>,
    layers: Vec<LayerCache>,
    h_final: Array2<f64>,
    steps: Vec<ReadoutCache>,
    g_final: Array2<f64>,
}

/// Grouped softmax: `group[i]` maps item i to its group; scores within a
/// group are normalized together. Items in empty groups cannot occur.
fn grouped_softmax(scores: &Array1<f64>, groups: &[usize], n_groups: usize) -> Array1<f64> {
    let mut max = vec![f64::NEG_INFINITY; n_groups];
    for (i, &g) in groups.iter().enumerate() {
        max[g] = max[g].max(scores[i]);
    }
    let mut sums = vec![0.0; n_groups];
    let mut out = Array1::zeros(scores.len());
    for (i, &g) in groups.iter().enumerate() {
        let e = (scores[i] - max[g]).exp();
        out[i] = e;
        sums[g] += e;
    }
    for (i, &g) in groups.iter().enumerate() {
        out[i] /= sums[g];
    }
    out
}

/// d(scores) given d(alpha) for a grouped softmax.
fn grouped_softmax_backward(
    alpha: &Array1<f64>,
    dalpha: &Array1<f64>,
    groups: &[usize],
    n_groups: usize,
) -> Array1<f64> {
    let mut inner = vec![0.0; n_groups];
    for (i, &g) in groups.iter().enumerate() {
        inner[g] += alpha[i] * dalpha[i];
    }
    let mut ds = Array1::zeros(alpha.len());
    for (i, &g) in groups.iter().enumerate() {
        ds[i] = alpha[i] * (dalpha[i] - inner[g]);
    }
    ds
}

/// Forward pass over a (possibly batched) graph. Returns per-graph
/// standardized predictions and the cache for backpropagation.
pub fn predictor_forward(
    params: &PredictorParams,
    graph: &GraphTensors,
) -> (Array2<f64>, PredictorCache) {
    predictor_forward_steps(params, graph, 3)
}

/// Forward with an explicit readout step count.
pub fn predictor_forward_steps(
    params: &PredictorParams,
    graph: &GraphTensors,
    readout_steps: usize,
) -> (Array2<f64>, PredictorCache) {
    let n = graph.n_nodes();
    assert!(n > 0, "empty graph");
    let hidden = params.hidden;
    let n_graphs = graph.n_graphs;
    let edge_targets: Vec<usize> = graph.edges.iter().map(|&(t, _)| t).collect();

    let h0_pre = graph.node_features.dot(&params.init_w) + &params.init_b;
    let mut h = h0_pre.mapv(leaky);

    let mut layer_caches = Vec::with_capacity(params.layers.len());
    for (l, layer) in params.layers.iter().enumerate() {
        let n_edges = graph.n_edges();
        let h_in = h.clone();

        // Neighbor representation per directed edge.
        let mut h_src = Array2::zeros((n_edges, hidden));
        for (e, &(_, src)) in graph.edges.iter().enumerate() {
            h_src.row_mut(e).assign(&h_in.row(src));
        }
        let (hat_pre, hat) = if l == 0 {
            let stacked = concatenate![Axis(1), h_src.view(), graph.edge_features.view()];
            let pre = stacked.dot(layer.edge_w.as_ref().unwrap())
                + layer.edge_b.as_ref().unwrap();
            let act = pre.mapv(leaky);
            (Some(pre), act)
        } else {
            (None, h_src)
        };

        // Attention over in-neighbors of each target.
        let mut att_in = Array2::zeros((n_edges, 2 * hidden));
        for (e, &(tgt, _)) in graph.edges.iter().enumerate() {
            att_in
                .slice_mut(s![e, 0..hidden])
                .assign(&h_in.row(tgt));
            att_in
                .slice_mut(s![e, hidden..2 * hidden])
                .assign(&hat.row(e));
        }
        let s_pre = att_in.dot(&layer.att_w) + layer.att_b[0];
        let scores = s_pre.mapv(leaky);
        let alpha = grouped_softmax(&scores, &edge_targets, n);

        let wc = hat.dot(&layer.ctx_w);
        let mut context = Array2::zeros((n, hidden));
        for (e, &(tgt, _)) in graph.edges.iter().enumerate() {
            let a = alpha[e];
            for k in 0..hidden {
                context[(tgt, k)] += a * wc[(e, k)];
            }
        }

        let (h_new, gru_cache) = gru_forward(&layer.gru, &context, &h_in);
        h = h_new;
        layer_caches.push(LayerCache {
            h_in,
            hat_pre,
            hat,
            att_in,
            s_pre,
            alpha,
            wc,
            gru: gru_cache,
        });
    }
    let h_final = h;

    // Readout: super-node attention over all atoms of each graph.
    let mut g = Array2::zeros((n_graphs, hidden));
    for (v, &gi) in graph.graph_of_node.iter().enumerate() {
        for k in 0..hidden {
            g[(gi, k)] += h_final[(v, k)];
        }
    }
    let mut step_caches = Vec::with_capacity(readout_steps);
    for _ in 0..readout_steps {
        let g_in = g.clone();
        let mut att_in = Array2::zeros((n, 2 * hidden));
        for (v, &gi) in graph.graph_of_node.iter().enumerate() {
            att_in.slice_mut(s![v, 0..hidden]).assign(&g_in.row(gi));
            att_in
                .slice_mut(s![v, hidden..2 * hidden])
                .assign(&h_final.row(v));
        }
        let s_pre = att_in.dot(&params.readout_att_w) + params.readout_att_b[0];
        let scores = s_pre.mapv(leaky);
        let alpha = grouped_softmax(&scores, &graph.graph_of_node, n_graphs);
        let wc = h_final.dot(&params.readout_ctx_w);
        let mut context = Array2::zeros((n_graphs, hidden));
        for (v, &gi) in graph.graph_of_node.iter().enumerate() {
            let a = alpha[v];
            for k in 0..hidden {
                context[(gi, k)] += a * wc[(v, k)];
            }
        }
        let (g_new, gru_cache) = gru_forward(&params.readout_gru, &context, &g_in);
        g = g_new;
        step_caches.push(ReadoutCache {
            att_in,
            s_pre,
            alpha,
            wc,
            gru: gru_cache,
        });
    }

    let out = g.dot(&params.out_w) + &params.out_b;
    (
        out,
        PredictorCache {
            h0_pre,
            layers: layer_caches,
            h_final: h_final.clone(),
            steps: step_caches,
            g_final: g,
        },
    )
}

/// Exact gradients for all trainable tensors given d(output).
pub fn predictor_backward(
    params: &PredictorParams,
    graph: &GraphTensors,
    cache: &PredictorCache,
    dout: &Array2<f64>,
) -> PredictorParams {
    let n = graph.n_nodes();
    let hidden = params.hidden;
    let n_graphs = graph.n_graphs;
    let mut grads = params.zeros_like();

    // Output head.
    grads.out_w += &cache.g_final.t().dot(dout);
    grads.out_b += &dout.sum_axis(Axis(0));
    let mut dg = dout.dot(&params.out_w.t());

    // Readout steps in reverse; parameters are shared across steps.
    let mut dh_final: Array2<f64> = Array2::zeros((n, hidden));
    let mut readout_gru_grads = params.readout_gru.zeros_like();
    for step in cache.steps.iter().rev() {
        let (dcontext, dg_state) =
            gru_backward(&params.readout_gru, &step.gru, &dg, &mut readout_gru_grads);

        // context[g] = sum_v alpha_v wc_v
        let mut dwc = Array2::zeros((n, hidden));
        let mut dalpha = Array1::zeros(n);
        for (v, &gi) in graph.graph_of_node.iter().enumerate() {
            let a = step.alpha[v];
            let mut dot = 0.0;
            for k in 0..hidden {
                dwc[(v, k)] = a * dcontext[(gi, k)];
                dot += step.wc[(v, k)] * dcontext[(gi, k)];
            }
            dalpha[v] = dot;
        }
        let ds = grouped_softmax_backward(&step.alpha, &dalpha, &graph.graph_of_node, n_graphs);
        let ds_pre =
            Array1::from_shape_fn(n, |v| ds[v] * dleaky(step.s_pre[v]));

        grads.readout_att_w += &step.att_in.t().dot(&ds_pre);
        grads.readout_att_b[0] += ds_pre.sum();
        // d att_in = ds_pre (outer) att_w
        let mut dg_next = dg_state;
        for (v, &gi) in graph.graph_of_node.iter().enumerate() {
            for k in 0..hidden {
                dg_next[(gi, k)] += ds_pre[v] * params.readout_att_w[k];
                dh_final[(v, k)] += ds_pre[v] * params.readout_att_w[hidden + k];
            }
        }
        grads.readout_ctx_w += &cache.h_final.t().dot(&dwc);
        dh_final += &dwc.dot(&params.readout_ctx_w.t());
        dg = dg_next;
    }
    grads.readout_gru = readout_gru_grads;
    // g0 = sum of node states.
    for (v, &gi) in graph.graph_of_node.iter().enumerate() {
        for k in 0..hidden {
            dh_final[(v, k)] += dg[(gi, k)];
        }
    }

    // Message-passing layers in reverse.
    let mut dh = dh_final;
    for (l, layer) in params.layers.iter().enumerate().rev() {
        let lc = &cache.layers[l];
        let n_edges = graph.n_edges();
        let mut layer_gru_grads = layer.gru.zeros_like();
        let (dcontext, mut dh_in) =
            gru_backward(&layer.gru, &lc.gru, &dh, &mut layer_gru_grads);

        let mut dwc = Array2::zeros((n_edges, hidden));
        let mut dalpha = Array1::zeros(n_edges);
        for (e, &(tgt, _)) in graph.edges.iter().enumerate() {
            let a = lc.alpha[e];
            let mut dot = 0.0;
            for k in 0..hidden {
                dwc[(e, k)] = a * dcontext[(tgt, k)];
                dot += lc.wc[(e, k)] * dcontext[(tgt, k)];
            }
            dalpha[e] = dot;
        }
        let edge_targets: Vec<usize> = graph.edges.iter().map(|&(t, _)| t).collect();
        let ds = grouped_softmax_backward(&lc.alpha, &dalpha, &edge_targets, n);
        let ds_pre = Array1::from_shape_fn(n_edges, |e| ds[e] * dleaky(lc.s_pre[e]));

        let att_w_grad = lc.att_in.t().dot(&ds_pre);
        let att_b_grad = ds_pre.sum();
        let mut dhat = dwc.dot(&layer.ctx_w.t());
        let ctx_w_grad = lc.hat.t().dot(&dwc);
        for (e, &(tgt, _)) in graph.edges.iter().enumerate() {
            for k in 0..hidden {
                dh_in[(tgt, k)] += ds_pre[e] * layer.att_w[k];
                dhat[(e, k)] += ds_pre[e] * layer.att_w[hidden + k];
            }
        }

        // Through the neighbor representation back to source states.
        if l == 0 {
            let pre = lc.hat_pre.as_ref().unwrap();
            let dhat_pre = Array2::from_shape_fn((n_edges, hidden), |(e, k)| {
                dhat[(e, k)] * dleaky(pre[(e, k)])
            });
            let mut h_src = Array2::zeros((n_edges, hidden));
            for (e, &(_, src)) in graph.edges.iter().enumerate() {
                h_src.row_mut(e).assign(&lc.h_in.row(src));
            }
            let stacked = concatenate![Axis(1), h_src.view(), graph.edge_features.view()];
            let gl = &mut grads.layers[l];
            *gl.edge_w.as_mut().unwrap() += &stacked.t().dot(&dhat_pre);
            *gl.edge_b.as_mut().unwrap() += &dhat_pre.sum_axis(Axis(0));
            let dstacked = dhat_pre.dot(&layer.edge_w.as_ref().unwrap().t());
            for (e, &(_, src)) in graph.edges.iter().enumerate() {
                for k in 0..hidden {
                    dh_in[(src, k)] += dstacked[(e, k)];
                }
            }
        } else {
            for (e, &(_, src)) in graph.edges.iter().enumerate() {
                for k in 0..hidden {
                    dh_in[(src, k)] += dhat[(e, k)];
                }
            }
        }

        let gl = &mut grads.layers[l];
        gl.att_w += &att_w_grad;
        gl.att_b[0] += att_b_grad;
        gl.ctx_w += &ctx_w_grad;
        gl.gru.w_i += &layer_gru_grads.w_i;
        gl.gru.w_h += &layer_gru_grads.w_h;
        gl.gru.b_i += &layer_gru_grads.b_i;
        gl.gru.b_h += &layer_gru_grads.b_h;

        dh = dh_in;
    }

    // Initial embedding.
    let dh0_pre = Array2::from_shape_fn((n, hidden), |(v, k)| {
        dh[(v, k)] * dleaky(cache.h0_pre[(v, k)])
    });
    grads.init_w += &graph.node_features.t().dot(&dh0_pre);
    grads.init_b += &dh0_pre.sum_axis(Axis(0));

    grads
}


/// Attention normalization diagnostics: the softmax sum over each
/// neighborhood (per layer) and over each graph's atoms (per readout
/// step).
pub struct AttentionDiagnostics {
    /// layer -> target node -> sum of incoming attention weights
    /// (only nodes with at least one in-edge appear).
    pub layer_sums: Vec<Vec<f64>>,
    /// readout step -> graph -> sum of atom attention weights.
    pub readout_sums: Vec<Vec<f64>>,
}

pub fn attention_diagnostics(
    params: &PredictorParams,
    graph: &GraphTensors,
    readout_steps: usize,
) -> AttentionDiagnostics {
    let (_, cache) = predictor_forward_steps(params, graph, readout_steps);
    let mut layer_sums = Vec::with_capacity(cache.layers.len());
    for lc in &cache.layers {
        let mut sums = vec![0.0; graph.n_nodes()];
        for (e, &(tgt, _)) in graph.edges.iter().enumerate() {
            sums[tgt] += lc.alpha[e];
        }
        layer_sums.push(
            (0..graph.n_nodes())
                .filter(|&v| graph.edges.iter().any(|&(t, _)| t == v))
                .map(|v| sums[v])
                .collect(),
        );
    }
    let mut readout_sums = Vec::with_capacity(cache.steps.len());
    for step in &cache.steps {
        let mut sums = vec![0.0; graph.n_graphs];
        for (v, &gi) in graph.graph_of_node.iter().enumerate() {
            sums[gi] += step.alpha[v];
        }
        readout_sums.push(sums);
    }
    AttentionDiagnostics {
        layer_sums,
        readout_sums,
    }
}
