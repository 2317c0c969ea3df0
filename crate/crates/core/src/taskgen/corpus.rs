//! Embedded filler material for synthetic tasks: a small corpus of original
//! essay-style paragraphs, a lorem-style fallback word list, and the word
//! lists that key the needle statements.

/// Essay-style filler paragraphs, shuffled and cycled at generation time.
pub const ESSAY_PARAGRAPHS: &[&str] = &[
    "Most people who learn to walk long distances discover the same thing in the first week: the body is not the obstacle. Feet toughen quickly, and even a mild pace covers surprising ground by late afternoon. What gives out first is the appetite for planning. Every junction demands a small decision, and small decisions compound into fatigue faster than hills do. Seasoned walkers solve this by deciding less, committing to a bearing in the morning and letting the path argue with them only when it must.",
    "A harbor town wakes in layers. The fish market opens before the bakeries, the bakeries before the banks, and by the time office workers appear the day already has an hour of commerce behind it. Visitors often mistake this for charm, but it is really logistics: boats cannot wait on banking hours, and bread proofs on its own schedule. The town's rhythm was negotiated over generations between tide tables and oven temperatures, and no committee could redesign it now.",
    "The first clocks were arguments about the sky. Builders of water clocks and sundials disagreed not about machinery but about what an hour was, whether it should stretch in summer and shrink in winter as daylight does, or hold constant while the seasons moved around it. Equal hours won because machines prefer them, and we have lived inside that preference ever since, waking in the dark half the year to satisfy a convenience of gears.",
    "Bread is one of the few technologies that still punishes impatience reliably. You can rush almost every modern process by paying more or waiting less, but dough ferments at the speed of yeast, and yeast does not take payment. Bakers describe their schedules the way sailors describe weather, as a thing negotiated with rather than commanded. The loaf records every shortcut taken, in texture and in smell, and it shows the record to anyone who slices it.",
    "Old maps lie in honest ways. Their coastlines wobble and their interiors thin out into speculation, but the lies are legible: you can see exactly where the surveyor stopped measuring and started hoping. Modern maps lie more smoothly. Their errors hide behind uniform typography and confident color, so a wrong road looks precisely as certain as a right one. The old cartographers at least had the decency to draw their ignorance as sea monsters.",
    "Every library develops a private geography that regulars navigate without thinking. The good chairs near the north windows, the shelf where the atlases lean, the table that wobbles unless you fold a catalogue card under its leg. None of this appears in the building plans. It accretes, the way a footpath accretes across a lawn, out of thousands of small preferences exercised daily until the institution quietly reorganizes itself around them.",
    "Rivers are the only infrastructure that maintains itself by being used. A channel carries water, and the water in turn carries the channel, scouring it deeper along the routes most traveled. Engineers who straighten a river learn this respect slowly and expensively. The river keeps its own ledger of curves, and given a century it will restore every meander the dredgers removed, with interest.",
    "The apprentice system survives wherever a skill cannot be written down. Recipes can be printed, but the feel of dough at the right hydration cannot, and neither can the sound a plane makes when the blade is set a hair too deep. Workshops transmit these things by proximity. The apprentice watches, fails under supervision, and one day discovers that their hands have learned something their vocabulary still lacks.",
    "Lighthouse keeping was never really about the light. The lamp wanted trimming and the clockwork wanted winding, but the actual occupation was attention: noticing a change in the swell, a new sound in the machinery, a sail where no sail should be. Automation replaced the lamp easily and the attention not at all, which is why so many automated stations now host instruments that measure everything and notice nothing.",
    "A city's alleys are its memory. Main streets get renamed for every generation's heroes, widened for every generation's vehicles, but the alleys keep their medieval widths and their working names, the ones that describe what was actually there: Tanners Row, Salt Lane, the Shambles. Planners tolerate them the way a museum tolerates its archive, grudgingly and without visiting, until a fire or a festival reminds everyone where the city actually keeps itself.",
    "Handwriting survived the printing press by becoming personal, and it will survive the keyboard the same way. What died was official handwriting, the copperplate of clerks who wrote all day for pay. What remains is the note in the margin, the list on the door, the signature, writing that matters precisely because a machine did not make it. Technologies rarely kill their predecessors; they retire them into sentiment.",
    "Tide pools run the fastest experiments in ecology. Twice a day the sea resets the apparatus, and everything living in the pool must handle boiling sun and cold immersion in the same afternoon. Creatures that manage this are not hardy so much as flexible, committed to no single climate. Biologists love tide pools for the same reason engineers love stress tests: the conditions are brutal, repeatable, and over by dinner.",
    "The best tool in most workshops is a scrap of wood. It shims, it clamps, it sacrifices itself under the saw so the good piece keeps its edge. Catalogues will not sell you one, because its virtue is that it was not bought. Professionals accumulate scrap the way scholars accumulate citations, not for any particular use but because the work goes faster when the right small thing is already within reach.",
    "Mountain weather is a negotiation conducted in minutes. Valley forecasts speak of fronts arriving over days, but a ridge manufactures its own clouds before lunch and disposes of them by early evening. Climbers learn to read the negotiation directly, watching how fast the banners of cloud stream off a summit, because the forecast that matters is always the one written in the next half hour, and it is published only in the sky.",
    "Markets are machines for the discovery of stubbornness. A price is just the point where a seller's patience meets a buyer's, and everything else, the shouting, the tickers, the solemn analyses, is commentary on that meeting. The old market halls understood this and built accordingly: a roof against the rain and benches for waiting, because waiting is the fundamental act of commerce, and whoever waits best sets the price.",
    "Islands breed dialects the way they breed finches. A strait of twenty miles is nothing to a boat and everything to a vowel; given three generations of partial isolation, the same language returns from the crossing wearing different clothes. Linguists chart these drifts with the patience of naturalists, knowing the ferry schedule is as decisive to the grammar as any academy, and that a new bridge can accomplish in a decade what centuries of decrees could not.",
    "The attic is the one room a house keeps for itself. Every other space gets renovated toward some magazine's idea of the present, but the attic accumulates, layer on layer, the evidence of every previous idea: the trunk, the cot, the lamp that will be wanted again someday. Families who move often lack attics and buy them back later by the cubic foot, renting in some warehouse the memory their house has no room to hold.",
    "Ferries are the last form of travel that remains social. A plane seats you; a ferry releases you onto a deck where the only entertainment is weather and other people. Commuter crossings develop standing arrangements, the card games, the thermos circles, and a crossing of forty minutes can sustain acquaintanceships of forty years. The bridge that eventually replaces the ferry is always celebrated as progress and always mourned as a neighborhood demolished.",
    "Good stone walls are built twice. The first build is with the hands, lifting and turning each rock until it finds the seat the wall has been keeping for it. The second build is with the eyes, walking the finished line and seeing where the coming winter will test it. Wallers speak of hearting, the hidden small stones that carry the real load, and take a particular satisfaction in work whose best parts will never be visible.",
    "Orchards teach a patience that gardens never require. A vegetable bed answers within the season; a new apple tree consults for five years before expressing an opinion. Planting one is therefore an act of autobiography, a bet on where and who you will be in a decade. Old orchards are the autobiography of whole villages, and cutting one down reads, to anyone fluent, like burning letters.",
    "The telegraph did to distance what the clock had done to daylight: made it negotiable. Before the wire, news traveled at the speed of paper and ships, and a merchant's advantage was measured in days. After it, advantage shrank to minutes, and whole professions of anticipation, the fast packets, the signal hills, the carrier pigeons of the exchanges, folded within a generation. Every acceleration since has only rerun that drama with smaller clocks.",
    "A workshop's floor records its biography in stains. Oil where the lathe stood before it was moved to the window, paint where the boat was finished the winter of the flood, a scorch from the one afternoon nobody talks about. New owners sand these floors at their peril, because along with the stains goes the floor's instruction manual, the worn paths that show where work actually wants to happen in that room.",
    "Glaciers are rivers with a different relationship to appointment-keeping. They arrive over centuries, reorganize the valley thoroughly, and leave without notice, and everything alpine lives in the house they rearranged. The lakes are their potholes, the soils their sweepings, the very gravel of the riverbed their opinion about geology, expressed slowly and enforced absolutely. Mountain towns are tenants of a landlord who moved out ten thousand years ago.",
    "The siesta was never laziness; it was arithmetic. Where afternoon heat makes labor cost more calories than it yields, stopping is the productive choice, and cultures arranged their hours accordingly, banking the cool mornings and evenings. Air conditioning redid the arithmetic, and the long lunch retreated to the provinces. It waits there, patient as climate, for the price of electricity to restore its logic.",
    "Salt was the first preserved wealth. Grain rots and cattle sicken, but a cellar of salt holds its value through any winter, and roads that still carry traffic in Europe were graded for its wagons. Whole grammars of pay and worth grew around it, and when we call a colleague worth their salt we are quoting, without knowing it, the payroll ledgers of antiquity.",
    "Beekeepers succeed by giving up on supervision. A hive cannot be managed bee by bee; it can only be read in aggregate, by the traffic at the entrance, the weight of the boxes, the temper of the hum. The keeper's art is to arrange conditions and then interfere as little as nerves allow. Most crafts converge on this discipline eventually, but beekeeping starts there, and stings anyone who forgets.",
    "Night trains are a technology for manufacturing distance. The map says the two cities are close; the sleeper insists otherwise, issuing you a berth, a ritual of folded blankets, and eight dark hours in which the journey can regain its old dignity. Travelers who could fly choose the train for the same reason readers choose long novels: some transformations require duration, and arrival means more when it has been earned asleep.",
    "The pencil is the most honest writing instrument because it includes its own apology. Ink commits; graphite proposes. Drafters and carpenters, whose mistakes are expensive, write in proposals, and the eraser's pink stub measures the distance between how certain we feel and how certain we are. Pens sign the treaty, but pencils negotiate it.",
    "Weather lore is statistics wearing a costume. Red sky at night compresses a true fact about westerly storm tracks into a rhyme a fisherman can hold; swallows flying low compress a barometric observation into something visible from a field. Each saying is a model, fitted over generations, validated by drowned men's absences from the record. Meteorology did not replace the lore so much as show its confidence intervals.",
    "Public squares are rooms whose ceiling is the sky, and they obey the acoustics of rooms. Too large and the crowd dissolves into picnics; too small and it compresses into a queue. The squares that revolutions remember are the medium ones, where a voice from the steps can just reach the far arcade, and where ten thousand people can feel, briefly and decisively, like one audience.",
    "Archives burn twice. The first fire takes the paper; the second, slower one takes the living memory of what the paper said, as the last clerks who handled it retire and the index of the lost collection becomes itself a relic. Archivists therefore practice a quiet form of triage, copying not what is most precious but what is most irreplaceable, two lists that overlap less than donors like to believe.",
    "A good knife is sharpened away. Every honing spends a little of the blade, and decades of mornings on the stone will use a wide cook's knife down to a sliver that the hand still trusts more than any replacement. Tools that improve with consumption are rare and preoccupying, and their owners speak of them the way riders speak of old horses, in the grammar of partnership rather than property.",
    "Canals embarrass modern schedules because they refuse to hurry and refuse to stop. Four miles an hour, around the clock if you like, through the backs of towns that turned their fronts to the roads long ago. Freight that travels this way arrives absurdly late by truck standards and absurdly reliably, immune to traffic, weather, and most of a century of infrastructure fashion. The water is patient, and patience, annualized, is speed.",
    "The chalkboard survives in mathematics departments for reasons the whiteboard salesmen never understood. Chalk has a speed limit, and the limit is the point: a proof unfolds at the pace a hand can write, which is near the pace a room can follow. The squeak and the dust are the costs of a medium that thinks at human speed, and mathematicians pay them the way musicians pay for gut strings.",
    "Harvest is the one deadline that negotiates with no one. Contracts, weddings, and wars have all been scheduled around the week the grain comes ready, because the grain does not reschedule, and a crop that waits invites the weather to make other plans for it. Societies built calendars, festivals, and school years around this immovable appointment, and the shape of summer vacation still carries the outline of a harvest nobody's children bring in anymore.",
    "Fog rearranges a coastline's honesty. Landmarks resign, distances inflate, and sounds are promoted to navigational instruments: the bell buoy, the gull colony, the particular dialect of surf on a particular shoal. Old pilots could smell a headland's kelp before they could see it and held courses by ear through passages that charts mark as requiring visibility. The fog did not blind them; it changed which of their senses was in charge.",
];

/// Lorem-style fallback words, for filler needing no bundled prose.
pub const LOREM_WORDS: &[&str] = &[
    "lorem",
    "ipsum",
    "dolor",
    "sit",
    "amet",
    "consectetur",
    "adipiscing",
    "elit",
    "sed",
    "do",
    "eiusmod",
    "tempor",
    "incididunt",
    "ut",
    "labore",
    "et",
    "dolore",
    "magna",
    "aliqua",
    "enim",
    "ad",
    "minim",
    "veniam",
    "quis",
    "nostrud",
    "exercitation",
    "ullamco",
    "laboris",
    "nisi",
    "aliquip",
    "ex",
    "ea",
    "commodo",
    "consequat",
    "duis",
    "aute",
    "irure",
    "in",
    "reprehenderit",
    "voluptate",
    "velit",
    "esse",
    "cillum",
    "fugiat",
    "nulla",
    "pariatur",
];

/// Adjective halves of needle keys.
pub const KEY_ADJECTIVES: &[&str] = &[
    "belligerent",
    "meticulous",
    "luminous",
    "taciturn",
    "jubilant",
    "arcane",
    "stalwart",
    "wistful",
    "intrepid",
    "placid",
    "obstinate",
    "genial",
    "austere",
    "mercurial",
    "sagacious",
    "diffident",
    "vigilant",
    "quixotic",
    "stoic",
    "affable",
    "laconic",
    "fervent",
    "prudent",
    "gregarious",
    "dauntless",
    "pensive",
    "cordial",
    "restive",
    "steadfast",
    "candid",
    "inscrutable",
    "buoyant",
];

/// Noun halves of needle keys.
pub const KEY_NOUNS: &[&str] = &[
    "councilperson",
    "archivist",
    "lighthouse",
    "cartographer",
    "beekeeper",
    "ferryman",
    "locksmith",
    "astronomer",
    "stonemason",
    "chorister",
    "navigator",
    "apothecary",
    "clockmaker",
    "harbormaster",
    "typesetter",
    "orchardist",
    "surveyor",
    "glassblower",
    "wheelwright",
    "falconer",
    "chandler",
    "engraver",
    "miller",
    "saddler",
    "weaver",
    "cooper",
    "tanner",
    "fletcher",
    "glazier",
    "potter",
    "shepherd",
    "scrivener",
];
