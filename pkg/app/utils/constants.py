MISSING_COLUMN_ERROR = "missing required column '{column}' in {path}"
UNREADABLE_FILE_ERROR = "cannot read {path}: {reason}"
UNKNOWN_ALIAS_ERROR = "unknown country alias '{alias}'"
DUPLICATE_YEAR_ERROR = "duplicate Games year {year} in {path}"
TALLY_YEAR_ERROR = "tally year {year} for {noc} is not a held Games year"
UNKNOWN_MEDAL_ERROR = "unknown medal value '{value}' on row {row}"
BAD_YEAR_ERROR = "year '{value}' on row {row} is not an integer"
BAD_COUNT_ERROR = "{column} '{value}' on row {row} is not a count"
IMPUTE_BOUNDARY_ERROR = "missing value at position {index} has no neighbour on both sides"
IMPUTE_CONSECUTIVE_ERROR = "consecutive missing values at positions {index} and {next_index}"
UNKNOWN_CATEGORY_ERROR = "value '{value}' is not registered for category '{category}'"
SCALAR_RANGE_ERROR = "count {count} outside domain 0..{max_count} for '{feature}'"
UNKNOWN_SPORT_ERROR = "sport '{sport}' is not in the sport index"
MISSING_ARTIFACT_ERROR = "missing artifact {path}; run '{command}' first"
UNKNOWN_COMMAND_ERROR = "unknown command '{name}'; expected one of {known}"
MISSING_INPUT_ERROR = "{subcommand} needs {what}"

MISSING_MARKERS = ("", "?", "na", "nan", "null", "none", "-")

MEDALS = ("Gold", "Silver", "Bronze", "NoMedal")
MEDAL_RANK = {"NoMedal": 0, "Bronze": 1, "Silver": 2, "Gold": 3}
MEDAL_ALIASES = {
    "gold": "Gold",
    "silver": "Silver",
    "bronze": "Bronze",
    "no medal": "NoMedal",
    "nomedal": "NoMedal",
    "none": "NoMedal",
}

FIRST_SUMMER_GAMES = 1896
GAMES_INTERVAL = 4

# upper bounds of the count domains; also the advisory tally ranges
SCALAR_DOMAINS = {
    "gold": 83,
    "silver": 78,
    "bronze": 77,
    "athletes": 1109,
    "events": 47,
}
TEAM_FEATURES = ("gold", "silver", "bronze", "athletes", "events")
ATHLETE_CATEGORIES = ("noc", "edition", "games", "awards", "sport")

EMBEDDING_SEED = 42
EMBEDDING_DIM = 10
PCA_COMPONENTS = 5
SLIDING_WINDOW = 5
MAX_CONSECUTIVE_GAMES = 5

HOST_ROW_INDEX = 81
STATE_ROWS = 82
TEAM_ROWS = 10

SPORTS = (
    "Aeronautics",
    "Alpinism",
    "Archery",
    "Art Competitions",
    "Artistic Gymnastics",
    "Artistic Swimming",
    "Athletics",
    "Badminton",
    "Baseball",
    "Basketball",
    "3x3 Basketball",
    "Basque Pelota",
    "Beach Volleyball",
    "BMX Freestyle",
    "BMX Racing",
    "Boxing",
    "Breaking",
    "Canoe Slalom",
    "Canoe Sprint",
    "Canoeing",
    "Cricket",
    "Croquet",
    "Cycling",
    "Cycling Road",
    "Cycling Track",
    "Diving",
    "Equestrian Dressage",
    "Equestrian Eventing",
    "Equestrian Jumping",
    "Equestrian Vaulting",
    "Fencing",
    "Figure Skating",
    "Football",
    "Golf",
    "Gymnastics",
    "Handball",
    "Hockey",
    "Ice Hockey",
    "Jeu de Paume",
    "Judo",
    "Karate",
    "Lacrosse",
    "Marathon Swimming",
    "Modern Pentathlon",
    "Motorboating",
    "Mountain Bike",
    "Polo",
    "Rackets",
    "Rhythmic Gymnastics",
    "Roque",
    "Rowing",
    "Rugby",
    "Rugby Sevens",
    "Sailing",
    "Shooting",
    "Skateboarding",
    "Softball",
    "Sport Climbing",
    "Surfing",
    "Swimming",
    "Table Tennis",
    "Taekwondo",
    "Tennis",
    "Trampoline",
    "Triathlon",
    "Tug of War",
    "Volleyball",
    "Water Motorsports",
    "Water Polo",
    "Weightlifting",
    "Wrestling",
)

ARIMA_MAX_P = 3
ARIMA_MAX_Q = 3
ARIMA_MAX_D = 2
ARIMA_DEFAULT_D = 1
ARIMA_MIN_ROWS = 8
ARIMA_OBS_PER_PARAM = 3
ARIMA_WHITENESS_ALPHA = 0.05
# small-sample (n=25) and asymptotic Dickey-Fuller critical values, constant-only regression
ADF_CRITICAL_25 = {"1%": -3.75, "5%": -3.00, "10%": -2.63}
ADF_CRITICAL_ASYMPTOTIC = {"1%": -3.43, "5%": -2.86, "10%": -2.57}

LSTM_HIDDEN = 32
LSTM_EPOCHS = 500
LSTM_LEARNING_RATE = 1e-3
LSTM_GRAD_CLIP = 5.0
LSTM_INIT_SCALE = 0.08
LSTM_FORGET_BIAS = 1.0

KNN_K = 2
SPORT_IMPORTANCE_TOP = 10
LOGISTIC_SLOPE = 5.0

SHAPLEY_MAX_FEATURES = 20
TRADITIONAL_ADVANTAGE_THRESHOLD = 0.3
TRADITIONAL_ADVANTAGE_STRONG = 0.5

SENSITIVITY_FRACTIONS = (1.0, 0.75, 0.5)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_ARTIFACT = 3
EXIT_NUMERIC = 4
