//! Word pools for the synthetic page generator. Pools used for different
//! fields are disjoint so every labeled value is unambiguous on its page.

pub const NAME_ADJ: &[&str] = &[
    "fun", "family", "golden", "silent", "bright", "little", "grand", "urban", "wild", "quiet",
    "royal", "lucky", "crimson", "hidden", "northern", "classic", "modern", "cosmic", "gentle",
    "rapid", "sunny", "frozen", "velvet", "electric", "ancient", "happy", "secret", "lunar",
];

pub const NAME_NOUN: &[&str] = &[
    "river", "harbor", "garden", "forest", "valley", "mountain", "city", "island", "meadow",
    "canyon", "bridge", "lantern", "compass", "orchard", "summit", "prairie", "station", "voyage",
    "horizon", "kingdom", "echo", "ember", "falcon", "tide", "willow", "atlas",
];

pub const EVENT_KIND: &[&str] = &[
    "fest", "festival", "fair", "night", "market", "concert", "gala", "parade", "expo", "workshop",
    "meetup", "party",
];

pub const PRODUCT_KIND: &[&str] = &[
    "blender",
    "lamp",
    "backpack",
    "kettle",
    "headphones",
    "chair",
    "jacket",
    "speaker",
    "toaster",
    "watch",
    "sneakers",
    "camera",
];

pub const MOVIE_LEAD: &[&str] = &["the", "a", "beyond the", "return of the", "escape from the"];

pub const DESC_OPEN: &[&str] = &["this", "our", "an", "one"];

pub const DESC_ADJ: &[&str] = &[
    "amazing",
    "wonderful",
    "memorable",
    "unique",
    "stylish",
    "durable",
    "thrilling",
    "charming",
    "relaxing",
    "exciting",
    "elegant",
    "powerful",
    "cozy",
    "touching",
    "lively",
    "practical",
];

pub const DESC_NOUN: &[&str] = &[
    "experience",
    "choice",
    "story",
    "design",
    "adventure",
    "gift",
    "journey",
    "option",
    "celebration",
    "classic",
    "favorite",
    "companion",
];

pub const DESC_TAIL: &[&str] = &[
    "for all ages",
    "for the whole family",
    "you will love",
    "made with care",
    "that everyone enjoys",
    "with plenty of surprises",
    "for every season",
    "worth every minute",
    "built to last",
    "for curious minds",
    "with friends and neighbors",
    "full of heart",
];

pub const MONTHS: &[&str] = &[
    "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
];

pub const VENUE_NAME: &[&str] = &[
    "spark",
    "pioneer",
    "riverside",
    "union",
    "liberty",
    "beacon",
    "maple",
    "granite",
    "cedar",
    "copper",
    "harmony",
    "orchid",
];

pub const VENUE_KIND: &[&str] = &[
    "social", "hall", "arena", "center", "theater", "pavilion", "club", "commons",
];

pub const CITY: &[&str] = &[
    "sf", "oakland", "boston", "denver", "austin", "seattle", "chicago", "portland", "miami",
    "atlanta",
];

pub const BRAND: &[&str] = &[
    "acme",
    "nordik",
    "zenware",
    "brightline",
    "kestrel",
    "ironwood",
    "lumina",
    "vertex",
    "solano",
    "tundra",
    "pixelcraft",
    "everhart",
];

pub const BRAND_SUFFIX: &[&str] = &["labs", "works", "goods", "co", "studio", "gear"];

pub const COLOR: &[&str] = &[
    "red", "navy", "black", "white", "olive", "teal", "maroon", "beige", "charcoal", "coral",
    "ivory", "mustard",
];

pub const COLOR_SHADE: &[&str] = &["light", "dark", "deep", "pale"];

pub const GENRE: &[&str] = &[
    "drama",
    "comedy",
    "thriller",
    "horror",
    "documentary",
    "romance",
    "western",
    "animation",
    "mystery",
    "fantasy",
    "musical",
    "biography",
];

pub const FIRST: &[&str] = &[
    "john", "maria", "wei", "olivia", "david", "sofia", "ahmed", "emma", "lucas", "priya", "kenji",
    "grace", "omar", "chloe", "mateo", "hannah", "ivan", "nina", "samuel", "leila",
];

pub const LAST: &[&str] = &[
    "smith", "garcia", "chen", "johnson", "silva", "kim", "novak", "patel", "rossi", "moreau",
    "tanaka", "okafor", "larsen", "haddad", "brennan", "costa", "fischer", "reyes",
];

pub const DISTRACTOR: &[&str] = &[
    "sign up for our newsletter",
    "all rights reserved",
    "share this page",
    "contact us",
    "privacy policy",
    "terms of service",
    "follow us online",
    "back to top",
    "free shipping on orders over fifty dollars",
    "customers also viewed",
    "read more reviews",
    "add to wishlist",
    "home",
    "about",
    "help center",
    "gift cards",
    "careers",
    "log in",
    "recently viewed",
    "site map",
    "you might also like",
    "questions and answers",
    "download our app",
    "accessibility",
];
