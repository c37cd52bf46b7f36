//! Model files are JSON:
//!
//! ```json
//! { "format": "driverid-model", "version": 1, "kind": "mlp", "model": { ... } }
//! ```
//!
//! `model` holds the spec, seed, schema, class list, standardizer and the
//! classifier parameters. Floats are written in shortest round-trip form, so
//! loading reproduces every parameter bit for bit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{ModelError, ModelKind, TrainedModel};
use crate::features::FeatureSchema;

pub const MODEL_FORMAT: &str = "driverid-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize)]
struct ContainerRef<'a> {
    format: &'a str,
    version: u32,
    kind: ModelKind,
    model: &'a TrainedModel,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

#[derive(Deserialize)]
struct Container {
    kind: ModelKind,
    model: TrainedModel,
}

pub fn save_model<W: Write>(model: &TrainedModel, mut sink: W) -> Result<(), ModelError> {
    let container = ContainerRef {
        format: MODEL_FORMAT,
        version: MODEL_VERSION,
        kind: model.kind(),
        model,
    };
    serde_json::to_writer(&mut sink, &container)?;
    sink.write_all(b"\n")?;
    sink.flush()?;
    Ok(())
}

pub fn load_model<R: Read>(mut source: R) -> Result<TrainedModel, ModelError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let header: Header = serde_json::from_str(&text)?;
    if header.format != MODEL_FORMAT {
        return Err(ModelError::Format(format!(
            "format `{}`, expected `{MODEL_FORMAT}`",
            header.format
        )));
    }
    if header.version != MODEL_VERSION {
        return Err(ModelError::Format(format!(
            "version {}, this build reads version {MODEL_VERSION}",
            header.version
        )));
    }
    let container: Container = serde_json::from_str(&text)?;
    if container.kind != container.model.kind() {
        return Err(ModelError::Format(format!(
            "kind tag `{}` does not match classifier `{}`",
            container.kind,
            container.model.kind()
        )));
    }
    container.model.check_consistency()?;
    Ok(container.model)
}

/// Loads a model and checks it was trained on `schema`.
pub fn load_model_expecting<R: Read>(source: R, schema: &FeatureSchema) -> Result<TrainedModel, ModelError> {
    let model = load_model(source)?;
    if &model.schema != schema {
        return Err(ModelError::SchemaMismatch(format!(
            "model expects {} features, configuration produces {}",
            model.schema.len(),
            schema.len()
        )));
    }
    Ok(model)
}
