"""
MemVote is a package for tracking visual objects with a part-level dense memory
and a voting-based memory retrieval, small enough to be trained on a desk.

Copyright (C) 2021 Gabriel Fontenelle Senno Silva

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.

This program is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
GNU General Public License for more details.

You should have received a copy of the GNU General Public License
along with this program.  If not, see <https://www.gnu.org/licenses/>.

Should there be a need for contact the electronic mail
`memvote <at> gabrielfontenelle.com` can be used.
"""
import argparse
import logging

from memvote import ImageEngine, Sequence, Storage, load_config, synthetic_suite


def export_sequence(sequence: Sequence, directory: str, engine: str = 'opencv') -> str:
    """
    Write `sequence` in the OTB layout: `img/0001.png`, ... and `groundtruth_rect.txt` in top-left convention.
    """
    target = Storage.join(directory, sequence.name)
    engine_class = ImageEngine.get_engine(engine)

    for index, frame in enumerate(sequence.frames(), start=1):
        image = engine_class.create_from_array(frame)
        Storage.save_file(Storage.join(target, 'img', f"{index:04d}.png"), (image.get_bytes('png'),))

    lines = [",".join(f"{value:.4f}" for value in box.to_corner()) for box in sequence.boxes]
    Storage.save_text(Storage.join(target, 'groundtruth_rect.txt'), "\n".join(lines) + "\n")

    if sequence.tag:
        Storage.save_text(Storage.join(target, 'tag.txt'), sequence.tag + "\n")

    return target


def main() -> None:
    parser = argparse.ArgumentParser(description="Export a synthetic suite as OTB sequence directories.")
    parser.add_argument('output')
    parser.add_argument('--config', help="JSON configuration whose `synth` section is used.")
    parser.add_argument('--count', type=int, default=20)
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--split', default='eval')
    arguments = parser.parse_args()

    logging.basicConfig(level=logging.INFO)
    config = load_config(arguments.config)

    for sequence in synthetic_suite(config.synth, arguments.count, arguments.seed, arguments.split):
        path = export_sequence(sequence, arguments.output, config.data.engine)
        logging.info(f"Exported {sequence.name} ({sequence.tag}) to {path}.")


if __name__ == '__main__':
    main()
