//! Minimal ONNX inference runtime covering the operators used by the
//! bundled detector and classifier graphs.

pub mod ops;
pub mod proto;
mod tensor;

use std::collections::HashMap;
use std::path::Path;

use prost::Message;
use sha2::{Digest, Sha256};

pub use tensor::Tensor;

use crate::error::{Error, Result};
use ops::Window;

#[derive(Debug, Clone)]
enum Op {
    Conv { win: Window, group: usize },
    MaxPool(Window),
    PRelu,
    Gemm { trans_b: bool, alpha: f32, beta: f32 },
    BatchNorm { eps: f32 },
    Relu,
    Add,
    Sub,
    Mul,
    Transpose(Vec<usize>),
    Flatten(usize),
    Softmax(i64),
    GlobalAveragePool,
    Resize,
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

/// A loaded, immutable inference graph. Safe to share across threads.
#[derive(Debug, Clone)]
pub struct Model {
    name: String,
    nodes: Vec<Node>,
    weights: HashMap<String, Tensor>,
    input: String,
    input_dims: Vec<Option<usize>>,
    outputs: Vec<String>,
    sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn model_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Model(msg.into()))
}

struct Attrs<'a>(&'a [proto::AttributeProto]);

impl Attrs<'_> {
    fn get(&self, name: &str) -> Option<&proto::AttributeProto> {
        self.0.iter().find(|a| a.name == name)
    }
    fn int(&self, name: &str, default: i64) -> i64 {
        self.get(name).map(|a| a.i).unwrap_or(default)
    }
    fn float(&self, name: &str, default: f32) -> f32 {
        self.get(name).map(|a| a.f).unwrap_or(default)
    }
    fn ints(&self, name: &str) -> Option<Vec<i64>> {
        self.get(name).map(|a| a.ints.clone())
    }
    fn string(&self, name: &str) -> Option<String> {
        self.get(name).map(|a| String::from_utf8_lossy(&a.s).into_owned())
    }
}

fn pair(v: Option<Vec<i64>>, default: usize, what: &str) -> Result<[usize; 2]> {
    match v.as_deref() {
        None => Ok([default, default]),
        Some(&[a, b]) if a > 0 && b > 0 => Ok([a as usize, b as usize]),
        Some(other) => model_err(format!("unsupported {what} {other:?}")),
    }
}

fn window(a: &Attrs, kernel: [usize; 2]) -> Result<Window> {
    let strides = pair(a.ints("strides"), 1, "strides")?;
    if let Some(d) = a.ints("dilations") {
        if d.iter().any(|&v| v != 1) {
            return model_err(format!("dilations {d:?} are not supported"));
        }
    }
    let pads = match a.ints("pads").as_deref() {
        None => [0; 4],
        Some(&[t, l, b, r]) if [t, l, b, r].iter().all(|&p| p >= 0) => {
            [t as usize, l as usize, b as usize, r as usize]
        }
        Some(other) => return model_err(format!("unsupported pads {other:?}")),
    };
    let same_upper = match a.string("auto_pad").as_deref() {
        None | Some("NOTSET") | Some("") => false,
        Some("VALID") => return Ok(Window { kernel, strides, pads: [0; 4], same_upper: false }),
        Some("SAME_UPPER") => true,
        Some(other) => return model_err(format!("auto_pad {other} is not supported")),
    };
    Ok(Window {
        kernel,
        strides,
        pads,
        same_upper,
    })
}

fn tensor_from_proto(t: &proto::TensorProto) -> Result<Tensor> {
    let shape: Vec<usize> = t.dims.iter().map(|&d| d as usize).collect();
    let data: Vec<f32> = match t.data_type {
        proto::DATA_FLOAT if !t.raw_data.is_empty() => t
            .raw_data
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect(),
        proto::DATA_FLOAT => t.float_data.clone(),
        proto::DATA_INT64 if !t.raw_data.is_empty() => t
            .raw_data
            .chunks_exact(8)
            .map(|b| i64::from_le_bytes(b.try_into().unwrap()) as f32)
            .collect(),
        proto::DATA_INT64 => t.int64_data.iter().map(|&v| v as f32).collect(),
        other => return model_err(format!("initializer {} has unsupported type {other}", t.name)),
    };
    Tensor::new(shape, data)
}

impl Model {
    /// Loads a model file, checking its SHA-256 when `expected_sha256` is set.
    pub fn load(path: &Path, expected_sha256: Option<&str>) -> Result<Model> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let digest = sha256_hex(&bytes);
        if let Some(expected) = expected_sha256 {
            if !digest.eq_ignore_ascii_case(expected.trim()) {
                return Err(Error::Config(format!(
                    "hash mismatch for {}: expected {expected}, found {digest}",
                    path.display()
                )));
            }
        }
        Model::from_bytes(&bytes).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Model> {
        let proto = proto::ModelProto::decode(bytes)
            .map_err(|e| Error::Model(format!("not an ONNX model: {e}")))?;
        if let Some(op) = proto.opset_import.iter().find(|o| o.domain.is_empty() || o.domain == "ai.onnx") {
            if op.version < 11 {
                return model_err(format!("opset {} is too old", op.version));
            }
        }
        let graph = proto.graph.ok_or_else(|| Error::Model("model has no graph".into()))?;
        let mut weights = HashMap::new();
        for t in &graph.initializer {
            weights.insert(t.name.clone(), tensor_from_proto(t)?);
        }
        let inputs: Vec<&proto::ValueInfoProto> =
            graph.input.iter().filter(|v| !weights.contains_key(&v.name)).collect();
        let [input] = inputs.as_slice() else {
            return model_err(format!("expected exactly one graph input, found {}", inputs.len()));
        };
        let input_dims = input
            .r#type
            .as_ref()
            .and_then(|t| t.tensor_type.as_ref())
            .and_then(|t| t.shape.as_ref())
            .map(|s| s.dim.iter().map(|d| d.dim_value.map(|v| v as usize)).collect())
            .unwrap_or_default();

        let mut nodes = Vec::with_capacity(graph.node.len());
        let mut known: std::collections::HashSet<String> = weights.keys().cloned().collect();
        known.insert(input.name.clone());
        for n in &graph.node {
            if !(n.domain.is_empty() || n.domain == "ai.onnx") {
                return model_err(format!("operator domain `{}` is not supported", n.domain));
            }
            let a = Attrs(&n.attribute);
            let op = match n.op_type.as_str() {
                "Conv" => {
                    let w = n.input.get(1).and_then(|w| weights.get(w));
                    let kernel = match w.map(|w| w.shape()) {
                        Some(&[_, _, kh, kw]) => [kh, kw],
                        _ => return model_err("Conv weights must be a 4-d initializer"),
                    };
                    let kernel = match a.ints("kernel_shape") {
                        Some(k) => pair(Some(k), 1, "kernel_shape")?,
                        None => kernel,
                    };
                    Op::Conv {
                        win: window(&a, kernel)?,
                        group: a.int("group", 1) as usize,
                    }
                }
                "MaxPool" => {
                    let kernel = pair(a.ints("kernel_shape"), 0, "kernel_shape")?;
                    if kernel[0] == 0 || a.int("ceil_mode", 0) != 0 {
                        return model_err("MaxPool needs kernel_shape and floor mode");
                    }
                    Op::MaxPool(window(&a, kernel)?)
                }
                "PRelu" => Op::PRelu,
                "Gemm" => {
                    if a.int("transA", 0) != 0 {
                        return model_err("Gemm with transA is not supported");
                    }
                    Op::Gemm {
                        trans_b: a.int("transB", 0) != 0,
                        alpha: a.float("alpha", 1.0),
                        beta: a.float("beta", 1.0),
                    }
                }
                "BatchNormalization" => Op::BatchNorm {
                    eps: a.float("epsilon", 1e-5),
                },
                "Relu" => Op::Relu,
                "Add" => Op::Add,
                "Sub" => Op::Sub,
                "Mul" => Op::Mul,
                "Transpose" => Op::Transpose(
                    a.ints("perm")
                        .ok_or_else(|| Error::Model("Transpose without perm".into()))?
                        .into_iter()
                        .map(|p| p as usize)
                        .collect(),
                ),
                "Flatten" => Op::Flatten(a.int("axis", 1) as usize),
                "Softmax" => Op::Softmax(a.int("axis", -1)),
                "GlobalAveragePool" => Op::GlobalAveragePool,
                "Resize" => {
                    let mode = a.string("mode").unwrap_or_else(|| "nearest".into());
                    let ctm = a
                        .string("coordinate_transformation_mode")
                        .unwrap_or_else(|| "half_pixel".into());
                    if mode != "linear" || ctm != "half_pixel" {
                        return model_err(format!("Resize mode {mode}/{ctm} is not supported"));
                    }
                    match n.input.get(2).and_then(|s| weights.get(s)) {
                        Some(s) if s.len() == 4 && s.data()[0] == 1.0 && s.data()[1] == 1.0 => {}
                        _ => return model_err("Resize needs constant scales on the spatial axes"),
                    }
                    Op::Resize
                }
                other => return model_err(format!("operator {other} is not supported")),
            };
            for i in n.input.iter().filter(|i| !i.is_empty()) {
                if !known.contains(i) {
                    return model_err(format!("node {} reads undefined value `{i}`", n.name));
                }
            }
            known.extend(n.output.iter().cloned());
            nodes.push(Node {
                op,
                inputs: n.input.clone(),
                outputs: n.output.clone(),
            });
        }
        let outputs: Vec<String> = graph.output.iter().map(|o| o.name.clone()).collect();
        if let Some(missing) = outputs.iter().find(|o| !known.contains(*o)) {
            return model_err(format!("graph output `{missing}` is never produced"));
        }
        Ok(Model {
            name: graph.name,
            nodes,
            weights,
            input: input.name.clone(),
            input_dims,
            outputs,
            sha256: sha256_hex(bytes),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sha256(&self) -> &str {
        &self.sha256
    }

    /// Declared input dimensions; `None` marks a symbolic dimension.
    pub fn input_dims(&self) -> &[Option<usize>] {
        &self.input_dims
    }

    pub fn output_names(&self) -> &[String] {
        &self.outputs
    }

    /// Runs the graph and returns all declared outputs by name.
    pub fn run(&self, input: Tensor) -> Result<HashMap<String, Tensor>> {
        if !self.input_dims.is_empty() {
            let ok = input.shape().len() == self.input_dims.len()
                && input
                    .shape()
                    .iter()
                    .zip(&self.input_dims)
                    .all(|(s, d)| d.is_none_or(|d| d == *s));
            if !ok {
                return model_err(format!(
                    "{}: input shape {:?} does not match declared {:?}",
                    self.name,
                    input.shape(),
                    self.input_dims
                ));
            }
        }
        let mut values: HashMap<&str, Tensor> = HashMap::new();
        values.insert(self.input.as_str(), input);
        for node in &self.nodes {
            let get = |i: usize| -> Result<&Tensor> {
                let name = node
                    .inputs
                    .get(i)
                    .filter(|n| !n.is_empty())
                    .ok_or_else(|| Error::Model(format!("missing input {i} for {:?}", node.op)))?;
                values
                    .get(name.as_str())
                    .or_else(|| self.weights.get(name))
                    .ok_or_else(|| Error::Model(format!("value `{name}` not available")))
            };
            let opt = |i: usize| -> Option<&Tensor> {
                node.inputs
                    .get(i)
                    .filter(|n| !n.is_empty())
                    .and_then(|n| values.get(n.as_str()).or_else(|| self.weights.get(n)))
            };
            let out = match &node.op {
                Op::Conv { win, group } => ops::conv2d(get(0)?, get(1)?, opt(2), win, *group)?,
                Op::MaxPool(win) => ops::max_pool(get(0)?, win)?,
                Op::PRelu => ops::prelu(get(0)?, get(1)?)?,
                Op::Gemm { trans_b, alpha, beta } => {
                    ops::gemm(get(0)?, get(1)?, opt(2), *trans_b, *alpha, *beta)?
                }
                Op::BatchNorm { eps } => {
                    ops::batch_norm(get(0)?, get(1)?, get(2)?, get(3)?, get(4)?, *eps)?
                }
                Op::Relu => ops::relu(get(0)?),
                Op::Add => ops::broadcast(get(0)?, get(1)?, |a, b| a + b)?,
                Op::Sub => ops::broadcast(get(0)?, get(1)?, |a, b| a - b)?,
                Op::Mul => ops::broadcast(get(0)?, get(1)?, |a, b| a * b)?,
                Op::Transpose(perm) => ops::transpose(get(0)?, perm)?,
                Op::Flatten(axis) => ops::flatten(get(0)?, *axis)?,
                Op::Softmax(axis) => ops::softmax(get(0)?, *axis)?,
                Op::GlobalAveragePool => ops::global_average_pool(get(0)?)?,
                Op::Resize => {
                    let s = get(2)?.data();
                    ops::resize_linear(get(0)?, s[2], s[3])?
                }
            };
            let name = node
                .outputs
                .first()
                .ok_or_else(|| Error::Model("node without outputs".into()))?;
            values.insert(name.as_str(), out);
        }
        self.outputs
            .iter()
            .map(|o| {
                values
                    .remove(o.as_str())
                    .map(|t| (o.clone(), t))
                    .ok_or_else(|| Error::Model(format!("output `{o}` was not computed")))
            })
            .collect()
    }
}
