use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    LedRed,
    LedGreen,
    LedBlue,
    DirectionUpdown,
    DirectionLeftright,
    DirectionCircle,
    None,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::LedRed => "LED_RED",
            Action::LedGreen => "LED_GREEN",
            Action::LedBlue => "LED_BLUE",
            Action::DirectionUpdown => "DIRECTION_UPDOWN",
            Action::DirectionLeftright => "DIRECTION_LEFTRIGHT",
            Action::DirectionCircle => "DIRECTION_CIRCLE",
            Action::None => "NONE",
        })
    }
}

/// Fixed label to action table. Unknown labels map to `None` with a warning.
pub fn action_map(label: &str) -> Action {
    match label {
        "red" => Action::LedRed,
        "green" => Action::LedGreen,
        "blue" => Action::LedBlue,
        "updown" => Action::DirectionUpdown,
        "leftright" => Action::DirectionLeftright,
        "circle" => Action::DirectionCircle,
        "noise" | "idle" => Action::None,
        other => {
            log::warn!("no action for label {other:?}");
            Action::None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table() {
        assert_eq!(action_map("red"), Action::LedRed);
        assert_eq!(action_map("green"), Action::LedGreen);
        assert_eq!(action_map("blue"), Action::LedBlue);
        assert_eq!(action_map("noise"), Action::None);
        assert_eq!(action_map("updown"), Action::DirectionUpdown);
        assert_eq!(action_map("leftright"), Action::DirectionLeftright);
        assert_eq!(action_map("circle"), Action::DirectionCircle);
        assert_eq!(action_map("idle"), Action::None);
        assert_eq!(action_map("unknownlabel"), Action::None);
        assert_eq!(Action::LedRed.to_string(), "LED_RED");
        assert_eq!(Action::DirectionLeftright.to_string(), "DIRECTION_LEFTRIGHT");
    }
}
