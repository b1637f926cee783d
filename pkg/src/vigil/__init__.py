"""vigil: turn CCTV video into compact, queryable text.

Pipeline: sample frames -> caption each frame through a pluggable
vision-language backend -> collapse redundant captions into time segments ->
summarize per camera -> fuse summaries across the camera network -> store
everything as newline-delimited text logs -> answer operator queries
(search, entity tracking, question answering).
"""

__version__ = "0.1.0"
