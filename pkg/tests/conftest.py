import io
import math
import struct
import wave

import pytest

from speech2latex.dataset import Dataset, EquationPair


def make_wav(duration_s: float = 0.25, rate: int = 16000, channels: int = 1,
             width: int = 2, freq: float = 440.0) -> bytes:
    """Synthesize a small PCM WAV entirely in memory."""
    n_frames = int(duration_s * rate)
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wav:
        wav.setnchannels(channels)
        wav.setsampwidth(width)
        wav.setframerate(rate)
        for i in range(n_frames):
            sample = int(12000 * math.sin(2 * math.pi * freq * i / rate))
            frame = struct.pack("<h", sample) if width == 2 else struct.pack("<b", sample >> 8)
            wav.writeframes(frame * channels)
    return buf.getvalue()


CORPUS = [
    ("eq1", "άλφα συν βήτα", "\\alpha + \\beta"),
    ("eq2", "χι τετράγωνο", "x^{2}"),
    ("eq3", "ένα δεύτερο", "\\frac{1}{2}"),
    ("eq4", "ρίζα του δύο", "\\sqrt{2}"),
    ("eq5", "άθροισμα από ένα έως ν", "\\sum_{i=1}^{n} i"),
    ("eq6", "ολοκλήρωμα του εφ", "\\int f(x) dx"),
    ("eq7", "όριο καθώς το χι τείνει στο μηδέν", "\\lim_{x \\to 0} f(x)"),
    ("eq8", "ημίτονο του χι", "\\sin(x)"),
]


def corpus_pairs(split="train"):
    return [EquationPair(id=i, nl_text=nl, latex=tex, split=split) for i, nl, tex in CORPUS]


@pytest.fixture
def train_pairs():
    return corpus_pairs("train")


@pytest.fixture
def small_dataset():
    return Dataset(corpus_pairs("train"))


@pytest.fixture
def wav_bytes():
    return make_wav()
