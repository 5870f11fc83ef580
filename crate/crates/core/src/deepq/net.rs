//! A small feedforward Q-network: learned state embedding, rectified
//! hidden layers, linear output with one unit per event.
//!
//! Gradients are derived by hand. The same struct doubles as a gradient
//! accumulator, so parameters and gradients share one layout.

use std::fmt::Write as _;

use crate::automata::{EventId, StateId};
use crate::error::NetError;
use crate::policy::{QValues, Rng};

pub const EMBEDDING_WIDTH: usize = 10;
pub const HIDDEN_WIDTHS: [usize; 3] = [50, 50, 50];

/// Fully connected layer; `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs] }
    }

    fn apply(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.biases.iter().enumerate().map(|(o, b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>()
        }));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxNet {
    num_states: usize,
    embedding_width: usize,
    /// `num_states × embedding_width`, row-major.
    pub embedding: Vec<f64>,
    /// Hidden layers followed by the output layer.
    pub layers: Vec<Dense>,
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Activations {
    state: StateId,
    /// `inputs[i]` is what layer `i` saw; `inputs[0]` is the embedding row.
    inputs: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

impl ApproxNet {
    /// All-zero network with the given layer widths.
    pub fn zeros(num_states: usize, num_actions: usize, embedding_width: usize, hidden: &[usize]) -> Self {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut width = embedding_width;
        for &h in hidden {
            layers.push(Dense::zeros(width, h));
            width = h;
        }
        layers.push(Dense::zeros(width, num_actions));
        ApproxNet { num_states, embedding_width, embedding: vec![0.0; num_states * embedding_width], layers }
    }

    /// Default architecture, every parameter uniform in `[-scale, scale]`.
    pub fn new(num_states: usize, num_actions: usize, scale: f64, rng: &mut Rng) -> Self {
        let mut net = ApproxNet::zeros(num_states, num_actions, EMBEDDING_WIDTH, &HIDDEN_WIDTHS);
        net.randomize(scale, rng);
        net
    }

    pub fn randomize(&mut self, scale: f64, rng: &mut Rng) {
        for p in self.params_mut() {
            for v in p.iter_mut() {
                *v = if scale > 0.0 { rng.uniform_in(-scale, scale) } else { 0.0 };
            }
        }
    }

    pub fn zeros_like(&self) -> Self {
        let hidden: Vec<usize> = self.layers[..self.layers.len() - 1].iter().map(|l| l.outputs).collect();
        ApproxNet::zeros(self.num_states, self.num_actions(), self.embedding_width, &hidden)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn shape(&self) -> String {
        let hidden: Vec<String> = self.layers[..self.layers.len() - 1].iter().map(|l| l.outputs.to_string()).collect();
        format!(
            "states={} actions={} embedding={} hidden={}",
            self.num_states,
            self.num_actions(),
            self.embedding_width,
            hidden.join(",")
        )
    }

    /// Parameter groups in declaration order: embedding, then weights and
    /// biases of each layer.
    pub fn params(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.embedding];
        for l in &self.layers {
            out.push(&l.weights);
            out.push(&l.biases);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![&mut self.embedding];
        for l in &mut self.layers {
            out.push(&mut l.weights);
            out.push(&mut l.biases);
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, scale: f64, other: &ApproxNet) {
        for (dst, src) in self.params_mut().into_iter().zip(other.params()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    fn check_state(&self, state: StateId) -> Result<(), NetError> {
        if state < self.num_states {
            Ok(())
        } else {
            Err(NetError::StateOutOfRange { state, num_states: self.num_states })
        }
    }

    pub fn forward(&self, state: StateId) -> Result<Vec<f64>, NetError> {
        Ok(self.forward_cached(state)?.output)
    }

    pub fn forward_cached(&self, state: StateId) -> Result<Activations, NetError> {
        self.check_state(state)?;
        let w = self.embedding_width;
        let mut inputs = Vec::with_capacity(self.layers.len());
        inputs.push(self.embedding[state * w..(state + 1) * w].to_vec());
        let mut out = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&inputs[i], &mut out);
            if i < last {
                for v in out.iter_mut() {
                    *v = v.max(0.0);
                }
                inputs.push(std::mem::take(&mut out));
            }
        }
        Ok(Activations { state, inputs, output: out })
    }

    /// Accumulates into `grad` the gradient of a loss whose derivative with
    /// respect to the output is `d_output`.
    pub fn backward(&self, acts: &Activations, d_output: &[f64], grad: &mut ApproxNet) {
        let mut delta = d_output.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = &acts.inputs[i];
            let g = &mut grad.layers[i];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                g.biases[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (gw, x) in row.iter_mut().zip(input) {
                    *gw += d * x;
                }
            }
            let mut prev = vec![0.0; layer.inputs];
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            if i > 0 {
                // rectifier: inputs[i] is the post-activation of layer i-1
                for (p, x) in prev.iter_mut().zip(input) {
                    if *x <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        let w = self.embedding_width;
        let row = &mut grad.embedding[acts.state * w..(acts.state + 1) * w];
        for (g, d) in row.iter_mut().zip(&delta) {
            *g += d;
        }
    }

    /// Text header line followed by every parameter as a little-endian
    /// `f64`, in [`ApproxNet::params`] order.
    pub fn to_dump(&self) -> Vec<u8> {
        let mut header = String::new();
        let _ = writeln!(header, "approxnet {}", self.shape());
        let mut out = header.into_bytes();
        for p in self.params() {
            for v in p {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_dump(bytes: &[u8]) -> Result<ApproxNet, NetError> {
        let bad = |m: &str| NetError::BadDump(m.to_owned());
        let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header line"))?;
        let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| bad("header is not UTF-8"))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("approxnet") {
            return Err(bad("header must start with `approxnet`"));
        }
        let (mut states, mut actions, mut embedding, mut hidden) = (None, None, None, None);
        for f in fields {
            let (k, v) = f.split_once('=').ok_or_else(|| bad("malformed header field"))?;
            let num = |v: &str| v.parse::<usize>().map_err(|_| bad("malformed number"));
            match k {
                "states" => states = Some(num(v)?),
                "actions" => actions = Some(num(v)?),
                "embedding" => embedding = Some(num(v)?),
                "hidden" => {
                    hidden = Some(
                        v.split(',').filter(|s| !s.is_empty()).map(num).collect::<Result<Vec<_>, _>>()?,
                    )
                }
                _ => return Err(bad("unknown header field")),
            }
        }
        let missing = || bad("incomplete header");
        let mut net = ApproxNet::zeros(
            states.ok_or_else(missing)?,
            actions.ok_or_else(missing)?,
            embedding.ok_or_else(missing)?,
            &hidden.ok_or_else(missing)?,
        );
        let body = &bytes[nl + 1..];
        if body.len() != net.num_params() * 8 {
            return Err(bad("parameter count does not match header"));
        }
        let mut chunks = body.chunks_exact(8);
        for p in net.params_mut() {
            for v in p.iter_mut() {
                *v = f64::from_le_bytes(chunks.next().expect("length checked").try_into().expect("8 bytes"));
            }
        }
        Ok(net)
    }
}

/// Network outputs of one state, viewed as Q-values for that state.
pub struct StateValues<'a>(pub &'a [f64]);

impl QValues for StateValues<'_> {
    fn q(&self, _state: StateId, event: EventId) -> f64 {
        self.0[event]
    }
}
