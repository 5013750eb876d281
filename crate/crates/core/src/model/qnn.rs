//! `qnn-v1`: the JSON model document.
//!
//! ```text
//! {
//!   "format": "qnn-v1",
//!   "input_shape": [1, 8, 8],
//!   "num_classes": 2,
//!   "output_head": "softmax",
//!   "layers": [
//!     {"kind": "flatten"},
//!     {"kind": "dense", "in": 64, "out": 2, "weights": [[...], [...]], "bias": [0.0, 0.0]},
//!     {"kind": "conv2d", "in_channels": 1, "out_channels": 4, "kernel": [3, 3],
//!      "stride": 1, "padding": "same", "weights": [[[[...]]]], "bias": [...]},
//!     {"kind": "relu"}
//!   ]
//! }
//! ```
//!
//! Parameters are written with 32-bit precision. Unknown fields produce a
//! warning; unknown layer kinds are an error.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{Map, Value};

use super::{Conv2d, Dense, Layer, Model, OutputHead, Padding};
use crate::error::{Error, Result};

pub const FORMAT_TAG: &str = "qnn-v1";

pub fn load_model(path: impl AsRef<Path>) -> Result<(Model, Vec<String>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let text = model_to_string(model)?;
    crate::io::write_atomic(path.as_ref(), text.as_bytes())
}

/// Parse a model document, returning the model and any warnings.
pub fn parse_model(text: &str) -> Result<(Model, Vec<String>)> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        Error::parse(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    let mut warnings = Vec::new();
    let obj = as_object(&root, "document")?;
    warn_unknown(
        obj,
        "document",
        &["format", "input_shape", "num_classes", "output_head", "layers"],
        &mut warnings,
    );
    let format = as_str(field(obj, "format", "document")?, "format")?;
    if format != FORMAT_TAG {
        return Err(Error::parse("format", format!("expected \"{FORMAT_TAG}\", got \"{format}\"")));
    }
    let input_shape = usize_list(field(obj, "input_shape", "document")?, "input_shape")?;
    let num_classes = as_usize(field(obj, "num_classes", "document")?, "num_classes")?;
    let output_head = match as_str(field(obj, "output_head", "document")?, "output_head")? {
        "logits" => OutputHead::Logits,
        "softmax" => OutputHead::Softmax,
        other => return Err(Error::parse("output_head", format!("unknown head \"{other}\""))),
    };
    let layer_values = field(obj, "layers", "document")?
        .as_array()
        .ok_or_else(|| Error::parse("layers", "expected an array"))?;
    let mut layers = Vec::with_capacity(layer_values.len());
    for (i, lv) in layer_values.iter().enumerate() {
        layers.push(parse_layer(lv, &format!("layers[{i}]"), &mut warnings)?);
    }
    let model = Model::new(input_shape, layers, num_classes, output_head)?;
    Ok((model, warnings))
}

fn parse_layer(v: &Value, ctx: &str, warnings: &mut Vec<String>) -> Result<Layer> {
    let obj = as_object(v, ctx)?;
    let kind = as_str(field(obj, "kind", ctx)?, &format!("{ctx}.kind"))?;
    match kind {
        "relu" | "flatten" => {
            warn_unknown(obj, ctx, &["kind"], warnings);
            Ok(if kind == "relu" { Layer::Relu } else { Layer::Flatten })
        }
        "dense" => {
            warn_unknown(obj, ctx, &["kind", "in", "out", "weights", "bias"], warnings);
            let in_dim = as_usize(field(obj, "in", ctx)?, &format!("{ctx}.in"))?;
            let out_dim = as_usize(field(obj, "out", ctx)?, &format!("{ctx}.out"))?;
            let weights = nested_numbers(
                field(obj, "weights", ctx)?,
                &[out_dim, in_dim],
                &format!("{ctx}.weights"),
            )?;
            let bias = nested_numbers(field(obj, "bias", ctx)?, &[out_dim], &format!("{ctx}.bias"))?;
            Ok(Layer::Dense(Dense {
                in_dim,
                out_dim,
                weights,
                bias,
            }))
        }
        "conv2d" => {
            warn_unknown(
                obj,
                ctx,
                &[
                    "kind",
                    "in_channels",
                    "out_channels",
                    "kernel",
                    "stride",
                    "padding",
                    "weights",
                    "bias",
                ],
                warnings,
            );
            let in_ch = as_usize(field(obj, "in_channels", ctx)?, &format!("{ctx}.in_channels"))?;
            let out_ch = as_usize(field(obj, "out_channels", ctx)?, &format!("{ctx}.out_channels"))?;
            let kernel = usize_list(field(obj, "kernel", ctx)?, &format!("{ctx}.kernel"))?;
            let [kh, kw] = kernel[..] else {
                return Err(Error::parse(format!("{ctx}.kernel"), "expected [kh, kw]"));
            };
            let stride = as_usize(field(obj, "stride", ctx)?, &format!("{ctx}.stride"))?;
            if stride == 0 {
                return Err(Error::ShapeInconsistency(format!("{ctx}: stride must be >= 1")));
            }
            let padding = match as_str(field(obj, "padding", ctx)?, &format!("{ctx}.padding"))? {
                "valid" => Padding::Valid,
                "same" => Padding::Same,
                other => {
                    return Err(Error::parse(
                        format!("{ctx}.padding"),
                        format!("unknown padding \"{other}\""),
                    ))
                }
            };
            let weights = nested_numbers(
                field(obj, "weights", ctx)?,
                &[out_ch, in_ch, kh, kw],
                &format!("{ctx}.weights"),
            )?;
            let bias = nested_numbers(field(obj, "bias", ctx)?, &[out_ch], &format!("{ctx}.bias"))?;
            Ok(Layer::Conv2d(Conv2d {
                in_channels: in_ch,
                out_channels: out_ch,
                kernel: (kh, kw),
                stride,
                padding,
                weights,
                bias,
            }))
        }
        other => Err(Error::parse(
            format!("{ctx}.kind"),
            format!("unknown layer kind \"{other}\""),
        )),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str, ctx: &str) -> Result<&'a Value> {
    obj.get(name)
        .ok_or_else(|| Error::parse(ctx, format!("missing field \"{name}\"")))
}

fn warn_unknown(obj: &Map<String, Value>, ctx: &str, known: &[&str], warnings: &mut Vec<String>) {
    for key in obj.keys() {
        if !known.contains(&key.as_str()) {
            warnings.push(format!("{ctx}: ignoring unknown field \"{key}\""));
        }
    }
}

fn as_object<'a>(v: &'a Value, ctx: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| Error::parse(ctx, "expected an object"))
}

fn as_str<'a>(v: &'a Value, ctx: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| Error::parse(ctx, "expected a string"))
}

fn as_usize(v: &Value, ctx: &str) -> Result<usize> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| Error::parse(ctx, "expected a non-negative integer"))
}

fn usize_list(v: &Value, ctx: &str) -> Result<Vec<usize>> {
    v.as_array()
        .ok_or_else(|| Error::parse(ctx, "expected an array"))?
        .iter()
        .enumerate()
        .map(|(i, x)| as_usize(x, &format!("{ctx}[{i}]")))
        .collect()
}

/// Flatten a nested array, checking it against the declared shape.
fn nested_numbers(v: &Value, shape: &[usize], ctx: &str) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(shape.iter().product());
    collect_nested(v, shape, ctx, &mut out)?;
    Ok(out)
}

fn collect_nested(v: &Value, shape: &[usize], ctx: &str, out: &mut Vec<f64>) -> Result<()> {
    match shape.split_first() {
        None => {
            let x = v
                .as_f64()
                .ok_or_else(|| Error::parse(ctx, "expected a number"))?;
            out.push(x);
            Ok(())
        }
        Some((&n, rest)) => {
            let arr = v
                .as_array()
                .ok_or_else(|| Error::parse(ctx, "expected an array"))?;
            if arr.len() != n {
                return Err(Error::ShapeInconsistency(format!(
                    "{ctx}: declared length {n}, found {}",
                    arr.len()
                )));
            }
            for (i, item) in arr.iter().enumerate() {
                collect_nested(item, rest, &format!("{ctx}[{i}]"), out)?;
            }
            Ok(())
        }
    }
}

fn write_f32(out: &mut String, v: f64) -> Result<()> {
    let f = v as f32;
    if !f.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "non-finite parameter {v} cannot be stored"
        )));
    }
    // `{:?}` always includes a decimal point or exponent
    write!(out, "{f:?}").unwrap();
    Ok(())
}

fn write_nested(out: &mut String, data: &[f64], shape: &[usize]) -> Result<()> {
    out.push('[');
    match shape {
        [_] => {
            for (i, &v) in data.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_f32(out, v)?;
            }
        }
        [n, rest @ ..] => {
            let stride = data.len() / n;
            for (i, chunk) in data.chunks(stride).enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_nested(out, chunk, rest)?;
            }
        }
        [] => unreachable!(),
    }
    out.push(']');
    Ok(())
}

pub fn model_to_string(model: &Model) -> Result<String> {
    let mut s = String::new();
    let dims = |v: &[usize]| {
        v.iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    };
    s.push_str("{\n");
    writeln!(s, "  \"format\": \"{FORMAT_TAG}\",").unwrap();
    writeln!(s, "  \"input_shape\": [{}],", dims(&model.input_shape)).unwrap();
    writeln!(s, "  \"num_classes\": {},", model.num_classes).unwrap();
    let head = match model.output_head {
        OutputHead::Logits => "logits",
        OutputHead::Softmax => "softmax",
    };
    writeln!(s, "  \"output_head\": \"{head}\",").unwrap();
    s.push_str("  \"layers\": [\n");
    for (i, layer) in model.layers.iter().enumerate() {
        s.push_str("    {");
        match layer {
            Layer::Relu | Layer::Flatten => write!(s, "\"kind\": \"{}\"", layer.kind()).unwrap(),
            Layer::Dense(d) => {
                write!(s, "\"kind\": \"dense\", \"in\": {}, \"out\": {}, \"weights\": ", d.in_dim, d.out_dim)
                    .unwrap();
                write_nested(&mut s, &d.weights, &[d.out_dim, d.in_dim])?;
                s.push_str(", \"bias\": ");
                write_nested(&mut s, &d.bias, &[d.out_dim])?;
            }
            Layer::Conv2d(c) => {
                let padding = match c.padding {
                    Padding::Valid => "valid",
                    Padding::Same => "same",
                };
                write!(
                    s,
                    "\"kind\": \"conv2d\", \"in_channels\": {}, \"out_channels\": {}, \"kernel\": [{}, {}], \"stride\": {}, \"padding\": \"{padding}\", \"weights\": ",
                    c.in_channels, c.out_channels, c.kernel.0, c.kernel.1, c.stride
                )
                .unwrap();
                write_nested(
                    &mut s,
                    &c.weights,
                    &[c.out_channels, c.in_channels, c.kernel.0, c.kernel.1],
                )?;
                s.push_str(", \"bias\": ");
                write_nested(&mut s, &c.bias, &[c.out_channels])?;
            }
        }
        s.push('}');
        if i + 1 < model.layers.len() {
            s.push(',');
        }
        s.push('\n');
    }
    s.push_str("  ]\n}\n");
    Ok(s)
}
