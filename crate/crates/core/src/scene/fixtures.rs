//! Built-in scenes, addressable by name from the command line.

use std::path::Path;

use super::{load_scene, parse_scene, Scene, SceneError};

const CORNELL: &str = include_str!("../../assets/cornell.toml");
const PLANE: &str = include_str!("../../assets/plane.toml");

fn builtin_obj(name: &str) -> Option<&'static str> {
    Some(match name {
        "cornell/floor.obj" => include_str!("../../assets/cornell/floor.obj"),
        "cornell/ceiling.obj" => include_str!("../../assets/cornell/ceiling.obj"),
        "cornell/back.obj" => include_str!("../../assets/cornell/back.obj"),
        "cornell/left.obj" => include_str!("../../assets/cornell/left.obj"),
        "cornell/right.obj" => include_str!("../../assets/cornell/right.obj"),
        "cornell/short_block.obj" => include_str!("../../assets/cornell/short_block.obj"),
        "cornell/tall_block.obj" => include_str!("../../assets/cornell/tall_block.obj"),
        "plane.obj" => include_str!("../../assets/plane.obj"),
        _ => return None,
    })
}

pub const BUILTIN_NAMES: [&str; 2] = ["cornell", "plane"];

/// A built-in scene by name.
pub fn builtin(name: &str) -> Option<Result<Scene, SceneError>> {
    let text = match name {
        "cornell" => CORNELL,
        "plane" => PLANE,
        _ => return None,
    };
    let resolve = |obj: &str| {
        builtin_obj(obj).map(str::to_string).ok_or_else(|| SceneError::Parse {
            path: name.to_string(),
            message: format!("unknown built-in mesh {obj}"),
        })
    };
    Some(parse_scene(text, name, &resolve))
}

/// The box used throughout the tests: five walls, two blocks, three
/// Lambertian materials, one spot.
pub fn cornell() -> Scene {
    builtin("cornell").expect("known name").expect("built-in scene is valid")
}

/// A large Lambertian plane under a downward 45° spot.
pub fn plane() -> Scene {
    builtin("plane").expect("known name").expect("built-in scene is valid")
}

/// Loads `arg` as a file if it exists, otherwise as a built-in name.
pub fn resolve(arg: &str) -> Result<Scene, SceneError> {
    let path = Path::new(arg);
    if path.exists() {
        return load_scene(path);
    }
    builtin(arg).unwrap_or_else(|| {
        Err(SceneError::Io {
            path: arg.to_string(),
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("no such file and not a built-in scene ({})", BUILTIN_NAMES.join(", ")),
            ),
        })
    })
}
